"""
Test Suite untuk CensusService
==============================

Exact counts of H(n,b), M(2n), T(n,b) and the squarefree, rough and
squarefull censuses, each against its brute-force oracle.
"""

import math
import os
import sys
import unittest
from fractions import Fraction
from pathlib import Path

from hypothesis import given, settings, strategies as st

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.exceptions import ResourceLimitError, UsageError
from app.models.lab_models import Factorization, Partition
from app.services.census_service import CensusService

RUN_SLOW = bool(os.environ.get('MULTAB_RUN_SLOW'))


class TestHeadlineCounts(unittest.TestCase):
    """|H(n,b)|, |M(2n)|, |T(n,b)|"""

    @classmethod
    def setUpClass(cls):
        cls.census = CensusService('testing')

    def test_anchors(self):
        self.assertEqual(self.census.count_H(2, 2, 1).count, 3)
        self.assertEqual(self.census.count_H(2, 4, 2).count, 9)
        self.assertEqual(self.census.count_T(4, 2).count, 10)
        self.assertEqual(self.census.count_M(2, 4).count, 9)
        self.assertEqual(self.census.brute_H(3, 2, 1), 6)

    def test_report_fields(self):
        report = self.census.count_H(2, 4, 2)
        self.assertEqual(report.total, 16)
        self.assertEqual(report.density, Fraction(9, 16))
        self.assertIsNotNone(report.predicted)
        self.assertIsNone(self.census.count_H(2, 4, 1).predicted)
        self.assertEqual(self.census.count_M(2, 4).b, 2)

    def test_count_H_matches_brute(self):
        for p, top in ((2, 12), (3, 12), (5, 8)):
            self.census.gfpoly.build_spf(p, top)
            for n in range(0, top + 1):
                expected = self.census.brute_H_profile(p, n)
                self.assertEqual([self.census.count_H(p, n, b).count for b in range(n + 1)], expected,
                                 f"p={p} n={n}")

    def test_squarefree_matches_brute(self):
        for p, top in ((2, 9), (3, 5)):
            for n in range(0, top + 1):
                expected = self.census.brute_H_profile(p, n, squarefree=True)
                self.assertEqual([self.census.count_H_squarefree(p, n, b).count for b in range(n + 1)], expected,
                                 f"p={p} n={n}")

    def test_squarefree_totals(self):
        for q in (2, 3, 4, 5):
            for n in range(2, 9):
                self.assertEqual(self.census.count_H_squarefree(q, n, 0).count, q ** n - q ** (n - 1))

    def test_count_T_matches_brute(self):
        for n in range(0, 9):
            for b in range(n + 1):
                self.assertEqual(self.census.count_T(n, b).count, self.census.brute_T(n, b), f"n={n} b={b}")

    def test_trivial_b(self):
        for n in range(0, 10):
            self.assertEqual(self.census.count_T(n, 0).count, math.factorial(n))
            self.assertEqual(self.census.count_T(n, n).count, math.factorial(n))
            self.assertEqual(self.census.count_H(4, n, 0).count, 4 ** n)

    @settings(max_examples=40, deadline=None)
    @given(q=st.sampled_from([2, 3, 4, 5, 7, 8, 9]), n=st.integers(0, 12), data=st.data())
    def test_symmetry(self, q, n, data):
        b = data.draw(st.integers(0, n))
        self.assertEqual(self.census.count_H(q, n, b).count, self.census.count_H(q, n, n - b).count)
        self.assertLessEqual(self.census.count_H(q, n, b).count, q ** n)
        self.assertEqual(self.census.count_T(n, b).count, self.census.count_T(n, n - b).count)

    def test_invalid_requests(self):
        with self.assertRaises(UsageError):
            self.census.count_H(6, 3, 1)
        with self.assertRaises(UsageError):
            self.census.count_H(2, 3, 4)
        with self.assertRaises(UsageError):
            self.census.count_M(2, 5)
        with self.assertRaises(UsageError):
            self.census.brute_H_profile(4, 2)

    def test_brute_limits(self):
        with self.assertRaises(ResourceLimitError):
            self.census.brute_H(2, 20, 1)
        with self.assertRaises(ResourceLimitError):
            self.census.brute_T(10, 1)

    def test_partition_budget(self):
        census = CensusService({'MAX_PARTITIONS': 100})
        with self.assertRaises(ResourceLimitError):
            census.count_H(2, 30, 3)

    def test_worker_count_does_not_change_counts(self):
        serial = CensusService('testing')
        expected_T = [serial.count_T(16, b).count for b in range(17)]
        expected_H = [serial.count_H(3, 14, b).count for b in range(15)]
        for workers in (4, 8):
            parallel = CensusService({'THREADS': workers})
            self.assertEqual([parallel.count_T(16, b).count for b in range(17)], expected_T)
            self.assertEqual([parallel.count_H(3, 14, b).count for b in range(15)], expected_H)

    @unittest.skipUnless(RUN_SLOW, 'set MULTAB_RUN_SLOW=1 for long oracle runs')
    def test_count_H_matches_brute_to_sixteen(self):
        census = CensusService('testing')
        profile = census.brute_H_profile(2, 16)
        self.assertEqual([census.count_H(2, 16, b).count for b in range(17)], profile)


class TestRoughAndSquarefull(unittest.TestCase):
    """Rough, squarefull and reduction censuses"""

    @classmethod
    def setUpClass(cls):
        cls.census = CensusService('testing')

    def test_rough_matches_brute(self):
        for p, top in ((2, 12), (3, 12)):
            self.census.gfpoly.build_spf(p, top)
            for n in range(1, top + 1):
                for d in range(1, n + 1):
                    self.assertEqual(self.census.count_rough(p, n, d), self.census.brute_rough(p, n, d),
                                     f"p={p} n={n} d={d}")

    def test_rough_anchor(self):
        self.assertEqual(self.census.count_rough(2, 3, 2), 2)
        self.assertEqual(self.census.count_rough(3, 5, 1), 3 ** 5)
        self.assertEqual(self.census.count_rough(2, 7, 7), 18)
        with self.assertRaises(UsageError):
            self.census.count_rough(2, 3, 0)

    def test_rough_product_discrepancy(self):
        row = self.census.rough_product_discrepancy(2, 12, 1)
        self.assertEqual(row['discrepancy'], 0)
        row = self.census.rough_product_discrepancy(2, 12, 4)
        self.assertEqual(row['discrepancy'], row['count'] - row['product'])
        self.assertEqual(row['relative'], row['discrepancy'] / row['product'])

    def test_squarefull_anchors(self):
        self.assertEqual(self.census.count_squarefull(2, 5), 4)
        self.assertEqual(self.census.count_squarefull(3, 4), 9)
        self.assertEqual(self.census.squarefull_series(2, 3), [1, 0, 2, 2])

    def test_squarefull_matches_brute(self):
        for p, top in ((2, 12), (3, 12)):
            self.census.gfpoly.build_spf(p, top)
            series = self.census.squarefull_series(p, top)
            for n in range(top + 1):
                self.assertEqual(series[n], self.census.brute_squarefull(p, n), f"p={p} n={n}")

    def test_squarefull_tail(self):
        previous = None
        for C in range(0, 20):
            exact, upper = self.census.squarefull_tail(2, C)
            self.assertLessEqual(float(exact), upper)
            if previous is not None:
                self.assertLessEqual(upper, previous)
            previous = upper
        with self.assertRaises(UsageError):
            self.census.squarefull_tail(2, -1)

    def test_tau_squarefull_sum_matches_table(self):
        top = 10
        table = self.census.gfpoly.build_spf(2, top)
        _, squarefull = self.census.gfpoly.multiplicity_flags(table, top)
        expected = Fraction(0)
        for index in range(table.offsets[top + 1]):
            if squarefull[index]:
                factorization = self.census.gfpoly.factorize_index(index, table)
                tau = math.prod(m + 1 for _, m in factorization.factors)
                expected += Fraction(tau, 2 ** factorization.degree)
        self.assertEqual(self.census.tau_squarefull_sum(2, top), expected)

    def test_squarefull_pairs_without_divisor(self):
        pairs = self.census.squarefull_pairs(2, 10, 3)
        self.assertEqual([row[0] for row in pairs], self.census.squarefull_series(2, 10))

    def test_squarefull_reduction(self):
        for q, top in ((2, 8), (3, 6)):
            for n in range(top + 1):
                for b in range(n + 1):
                    row = self.census.squarefull_reduction_check(q, n, b)
                    self.assertTrue(row['holds'], row)


class TestDistributionChecks(unittest.TestCase):
    """Type discrepancy and divisor profiles"""

    @classmethod
    def setUpClass(cls):
        cls.census = CensusService('testing')

    def test_bbr_small_n(self):
        for q in (2, 3, 4, 9):
            self.assertEqual(self.census.bbr_discrepancy(q, 1)[0], 0)
            self.assertEqual(self.census.bbr_discrepancy(q, 2)[0], Fraction(1, 2))

    def test_bbr_sweep(self):
        sweep = self.census.bbr_sweep(3, 16)
        self.assertEqual([q for q, _, _ in sweep['rows']], [2, 3, 4, 5, 7, 8, 9, 11, 13, 16])
        self.assertEqual(sweep['sup'], max(value for _, value, _ in sweep['rows']))
        self.assertIsInstance(sweep['sup_partition'], Partition)

    def test_tau_and_profile(self):
        self.assertEqual(self.census.tau_and_divisor_profile(Factorization.from_degrees([(1, 1), (1, 1)])),
                         (4, [1, 2, 1]))
        self.assertEqual(self.census.tau_and_divisor_profile(Factorization.from_degrees([(1, 2)])),
                         (3, [1, 1, 1]))

    def test_divisor_sum_ratio(self):
        # with b < 8 only A = 1 enters the inner sum
        self.assertEqual(self.census.divisor_sum_ratio(2, 4, 2), Fraction(9 * 4, 16))
        self.assertGreater(self.census.divisor_sum_ratio(2, 12, 8), 0)
        with self.assertRaises(UsageError):
            self.census.divisor_sum_ratio(2, 4, 0)


def run_tests():
    """Run all tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for test_class in (TestHeadlineCounts, TestRoughAndSquarefull, TestDistributionChecks):
        suite.addTests(loader.loadTestsFromTestCase(test_class))
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    sys.exit(0 if run_tests() else 1)
