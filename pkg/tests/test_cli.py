"""
Test Suite untuk multab-lab CLI
===============================

End-to-end runs of the command-line interface: report formats, exit codes,
schema conformance and reproducibility.
"""

import contextlib
import io
import json
import math
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.utils.file_manager import FileManager
from multab_cli import LabCLI

RUN_SLOW = bool(os.environ.get('MULTAB_RUN_SLOW'))


def run_cli(*argv):
    """(exit code, stdout text) for one CLI run under the testing profile."""
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer), contextlib.redirect_stderr(io.StringIO()):
        code = LabCLI().run(list(argv) + ['--env', 'testing', '--quiet'])
    return code, buffer.getvalue()


class TestCountCommand(unittest.TestCase):
    """count subcommand"""

    def test_H_row(self):
        code, text = run_cli('count', '--kind', 'H', '--q', '2', '--n', '4', '--b', '2')
        lines = text.splitlines()
        self.assertEqual(code, 0)
        self.assertEqual(lines[0], 'kind,q,n,b,count,density,predicted,ratio')
        self.assertTrue(lines[1].startswith('H,2,4,2,9,0.5625,'))

    def test_T_row(self):
        code, text = run_cli('count', '--kind', 'T', '--n', '4', '--b', '2')
        self.assertEqual(code, 0)
        self.assertTrue(text.splitlines()[1].startswith('T,,4,2,10,'))

    def test_M_row(self):
        code, text = run_cli('count', '--kind', 'M', '--q', '2', '--deg', '4')
        self.assertEqual(code, 0)
        self.assertTrue(text.splitlines()[1].startswith('M,2,4,2,9,'))

    def test_full_b_range(self):
        code, text = run_cli('count', '--kind', 'Hsf', '--q', '3', '--n', '2:3')
        rows = text.splitlines()[1:]
        self.assertEqual(code, 0)
        self.assertEqual(len(rows), 3 + 4)
        self.assertTrue(rows[0].startswith('Hsf,3,2,0,6,'))

    def test_json_matches_schema(self):
        code, text = run_cli('count', '--kind', 'H', '--q', '3', '--n', '2:6', '--format', 'json')
        self.assertEqual(code, 0)
        self.assertTrue(FileManager().validate_document(text)['valid'])
        payload = json.loads(text)
        self.assertEqual(payload['document'], 'count')
        self.assertEqual(payload['meta']['delta'], '0.086071')
        self.assertIsNone(payload['rows'][0]['predicted'])

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, 'nested', 'counts.csv')
            code, text = run_cli('count', '--kind', 'T', '--n', '5', '-o', target)
            self.assertEqual(code, 0)
            self.assertEqual(text, '')
            with open(target, encoding='utf-8') as handle:
                self.assertEqual(len(handle.read().splitlines()), 1 + 6)


class TestExitCodes(unittest.TestCase):
    """Usage, resource and check failures"""

    def test_composite_q(self):
        self.assertEqual(run_cli('count', '--kind', 'H', '--q', '6', '--n', '4')[0], 2)

    def test_unknown_kind(self):
        self.assertEqual(run_cli('count', '--kind', 'X', '--n', '4')[0], 2)

    def test_missing_subcommand(self):
        with contextlib.redirect_stderr(io.StringIO()):
            self.assertEqual(LabCLI().run([]), 2)

    def test_empty_grid(self):
        self.assertEqual(run_cli('count', '--kind', 'T', '--n', '3', '--b', '5')[0], 2)

    def test_partition_budget(self):
        code, _ = run_cli('count', '--kind', 'H', '--q', '2', '--n', '30', '--max-partitions', '100')
        self.assertEqual(code, 3)

    def test_family_needs_large_b(self):
        self.assertEqual(run_cli('construct', '--q', '2', '--family', '--b', '100')[0], 2)

    def test_broken_multiset_count_fails_verification(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, 'verify.json')
            with patch('app.services.primecount_service.multichoose', math.comb):
                code, _ = run_cli('verify', '--scope', 'primecount', '-o', target)
            self.assertEqual(code, 1)
            with open(target, encoding='utf-8') as handle:
                summary = json.load(handle)
            self.assertFalse(summary['success'])
            self.assertIn('count_with_type', summary['data']['failed'])


class TestOtherCommands(unittest.TestCase):
    """verify, fit, construct and sample"""

    def test_verify_partitions(self):
        code, text = run_cli('verify', '--scope', 'partitions')
        self.assertEqual(code, 0)
        self.assertTrue(FileManager().validate_document(text)['valid'])
        summary = json.loads(text)
        self.assertTrue(summary['success'])
        self.assertEqual(summary['data']['scope'], 'partitions')
        self.assertEqual(summary['data']['failed'], [])

    def test_fit_json(self):
        code, text = run_cli('fit', '--kind', 'T', '--n', '8,10', '--b', '2:4', '--format', 'json')
        self.assertEqual(code, 0)
        self.assertTrue(FileManager().validate_document(text)['valid'])
        payload = json.loads(text)
        self.assertEqual(len(payload['rows']), 6)
        self.assertEqual(payload['meta']['model'], 'asymptotic')

    def test_fit_gnuplot(self):
        code, text = run_cli('fit', '--kind', 'H', '--q', '2', '--n', '6,8', '--gnuplot')
        lines = text.splitlines()
        self.assertEqual(code, 0)
        self.assertEqual(lines[0], '# delta=0.086071')
        self.assertIn('', lines)
        self.assertTrue(all(row[0] != '#' for row in lines[3:] if row))

    def test_construct_intervals(self):
        code, text = run_cli('construct', '--q', '2', '--intervals', '5', '--format', 'json')
        self.assertEqual(code, 0)
        self.assertTrue(FileManager().validate_document(text)['valid'])
        rows = json.loads(text)['rows']
        self.assertEqual([row['last_degree'] for row in rows], [1, 4, 8, 16, 32])
        self.assertTrue(rows[0]['overflow'])

    def test_construct_family(self):
        code, text = run_cli('construct', '--q', '2', '--family', '--b', '1024', '--format', 'json')
        self.assertEqual(code, 0)
        row = json.loads(text)['rows'][0]
        self.assertEqual(row['min_f'], '3/4')
        self.assertEqual(row['k'], 2)
        self.assertTrue(row['cap_ok'])

    def test_sample_schema(self):
        code, text = run_cli('sample', '--kind', 'H', '--q', '2', '--n', '8', '--b', '3',
                             '--trials', '500', '--format', 'json')
        self.assertEqual(code, 0)
        self.assertTrue(FileManager().validate_document(text)['valid'])

    def outputs_across_workers(self, *argv):
        outputs = []
        with tempfile.TemporaryDirectory() as tmp:
            for threads in ('1', '4', '8'):
                target = os.path.join(tmp, f'out-{threads}')
                code, _ = run_cli(*argv, '--threads', threads, '-o', target)
                self.assertEqual(code, 0)
                with open(target, 'rb') as handle:
                    outputs.append(handle.read())
        return outputs

    def test_sample_identical_across_workers(self):
        outputs = self.outputs_across_workers('sample', '--kind', 'T', '--n', '20', '--b', '7',
                                              '--trials', '5000', '--seed', '4')
        self.assertTrue(outputs[0])
        self.assertEqual(outputs[1], outputs[0])
        self.assertEqual(outputs[2], outputs[0])

    def test_count_identical_across_workers(self):
        for argv in (('count', '--kind', 'T', '--n', '14:16'),
                     ('count', '--kind', 'H', '--q', '3', '--n', '12', '--format', 'json')):
            outputs = self.outputs_across_workers(*argv)
            self.assertTrue(outputs[0])
            self.assertEqual(outputs[1], outputs[0])
            self.assertEqual(outputs[2], outputs[0])

    @unittest.skipUnless(RUN_SLOW, 'set MULTAB_RUN_SLOW=1 for the full verification run')
    def test_verify_all(self):
        code, text = run_cli('verify', '--scope', 'all')
        self.assertEqual(code, 0, json.loads(text)['data']['failed'])

    @unittest.skipUnless(RUN_SLOW, 'set MULTAB_RUN_SLOW=1 for large exact fits')
    def test_fit_shape(self):
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer):
            code = LabCLI().run(['fit', '--kind', 'T', '--n', '32,48,64', '--format', 'json', '--quiet',
                                 '--threads', str(os.cpu_count() or 1)])
        self.assertEqual(code, 0)
        ratios = {(row['n'], row['b']): float(row['ratio']) for row in json.loads(buffer.getvalue())['rows']}
        middle = [ratios[(n, n // 2)] for n in (32, 48, 64)]
        self.assertLessEqual(max(middle) / min(middle), 1.5)
        spread = [ratios[(64, b)] for b in (8, 16, 32)]
        self.assertLessEqual(max(spread) / min(spread), 4)


def run_tests():
    """Run all tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for test_class in (TestCountCommand, TestExitCodes, TestOtherCommands):
        suite.addTests(loader.loadTestsFromTestCase(test_class))
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    sys.exit(0 if run_tests() else 1)
