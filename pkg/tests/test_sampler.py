"""
Test Suite untuk SamplerService
===============================

Cycle-type sampling law, density estimates against exact counts, and
reproducibility across worker counts.
"""

import math
import os
import sys
import unittest
from collections import Counter
from pathlib import Path

import numpy as np

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.exceptions import UsageError
from app.services.census_service import CensusService
from app.services.partition_service import PartitionService
from app.services.sampler_service import (
    SamplerService, block_generator, feller_cycle_lengths, wilson_interval
)

RUN_SLOW = bool(os.environ.get('MULTAB_RUN_SLOW'))


class TestStreams(unittest.TestCase):
    """Counter-based random streams"""

    def test_block_streams_are_reproducible(self):
        first = block_generator(7, 3).integers(0, 10 ** 9, size=5)
        second = block_generator(7, 3).integers(0, 10 ** 9, size=5)
        other = block_generator(7, 4).integers(0, 10 ** 9, size=5)
        np.testing.assert_array_equal(first, second)
        self.assertFalse(np.array_equal(first, other))

    def test_cycle_lengths_cover_n(self):
        rng = block_generator(1, 0)
        for n in (1, 5, 40):
            for _ in range(50):
                lengths = feller_cycle_lengths(n, rng)
                self.assertEqual(sum(lengths), n)
                self.assertTrue(all(x >= 1 for x in lengths))

    def test_wilson_interval(self):
        low, high = wilson_interval(40, 100)
        self.assertLess(low, 0.4)
        self.assertGreater(high, 0.4)
        self.assertEqual(wilson_interval(0, 10)[0], 0.0)
        self.assertEqual(wilson_interval(10, 10)[1], 1.0)
        self.assertEqual(wilson_interval(0, 0), (0.0, 1.0))


class TestSampler(unittest.TestCase):
    """Density estimates"""

    @classmethod
    def setUpClass(cls):
        cls.sampler = SamplerService('testing')
        cls.census = CensusService('testing')
        cls.partitions = PartitionService('testing')

    def test_cycle_type_law(self):
        n, trials = 4, 20000
        rng = block_generator(11, 0)
        seen = Counter(self.sampler.sample_cycle_type(n, rng) for _ in range(trials))
        for partition in self.partitions.enumerate_partitions(n):
            p = float(self.partitions.cycle_type_probability(partition))
            sigma = math.sqrt(p * (1 - p) / trials)
            self.assertLess(abs(seen[partition] / trials - p), 5 * sigma, partition.to_string())

    def test_T_estimate_near_exact(self):
        estimate = self.sampler.estimate_T_density(8, 3, 6000, 5)
        exact = float(self.census.count_T(8, 3).density)
        self.assertLess(abs(estimate.estimate - exact), 5 * math.sqrt(exact * (1 - exact) / 6000))
        self.assertLessEqual(estimate.ci_low, estimate.estimate)
        self.assertGreaterEqual(estimate.ci_high, estimate.estimate)

    def test_H_estimate_near_exact(self):
        estimate = self.sampler.estimate_H_density(2, 10, 4, 6000, 5)
        exact = float(self.census.count_H(2, 10, 4).density)
        self.assertLess(abs(estimate.estimate - exact), 5 * math.sqrt(exact * (1 - exact) / 6000))
        self.assertEqual(estimate.q, 2)

    def test_trivial_b_hits_everything(self):
        estimate = self.sampler.estimate_T_density(10, 10, 100, 1)
        self.assertEqual(estimate.hits, 100)
        self.assertEqual(estimate.b, 10)

    def test_symmetric_b_uses_same_stream(self):
        low = self.sampler.estimate_T_density(12, 3, 2000, 9)
        high = self.sampler.estimate_T_density(12, 9, 2000, 9)
        self.assertEqual(low.hits, high.hits)
        self.assertEqual(high.b, 9)

    def test_seed_reproducibility(self):
        first = self.sampler.estimate_T_density(15, 6, 3000, 21)
        second = self.sampler.estimate_T_density(15, 6, 3000, 21)
        self.assertEqual(first.hits, second.hits)

    def test_workers_do_not_change_hits(self):
        serial = self.sampler.estimate_T_density(20, 7, 5000, 4, threads=1)
        for workers in (4, 8):
            parallel = self.sampler.estimate_T_density(20, 7, 5000, 4, threads=workers)
            self.assertEqual(parallel.hits, serial.hits)

    def test_invalid_requests(self):
        with self.assertRaises(UsageError):
            self.sampler.estimate_T_density(0, 0, 10, 1)
        with self.assertRaises(UsageError):
            self.sampler.estimate_T_density(5, 6, 10, 1)
        with self.assertRaises(UsageError):
            self.sampler.estimate_T_density(5, 2, 0, 1)

    @unittest.skipUnless(RUN_SLOW, 'set MULTAB_RUN_SLOW=1 for calibration runs')
    def test_interval_calibration(self):
        trials, workers = 10 ** 5, os.cpu_count() or 1
        exact = float(self.census.count_T(30, 15).density)
        covered = 0
        for seed in range(200):
            estimate = self.sampler.estimate_T_density(30, 15, trials, seed, threads=workers)
            covered += estimate.ci_low <= exact <= estimate.ci_high
        self.assertGreaterEqual(covered, 180)
        default = self.sampler.estimate_T_density(30, 15, trials, 7, threads=workers)
        self.assertLess(abs(default.estimate - exact), 3 * default.standard_error)


def run_tests():
    """Run all tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for test_class in (TestStreams, TestSampler):
        suite.addTests(loader.loadTestsFromTestCase(test_class))
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    sys.exit(0 if run_tests() else 1)
