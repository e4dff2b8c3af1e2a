"""
Test Suite untuk GFPolyService
==============================

Arithmetic, rank encoding, the SpfTable sieve and factorization over F_p.
"""

import sys
import unittest
from collections import namedtuple
from pathlib import Path
from unittest.mock import patch

from hypothesis import given, settings, strategies as st
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.exceptions import ResourceLimitError, UsageError
from app.models.lab_models import MonicPoly, Partition
from app.services.gfpoly_service import GFPolyService

IRREDUCIBLE_F2 = [2, 1, 2, 3, 6, 9, 18, 30]
IRREDUCIBLE_F3 = [3, 3, 8, 18, 48, 116]


def poly_strategy(p, max_degree):
    return st.lists(st.integers(0, p - 1), max_size=max_degree).map(lambda coeffs: MonicPoly(p, tuple(coeffs)))


class TestArithmetic(unittest.TestCase):
    """Multiplication, division and ranks"""

    def setUp(self):
        self.service = GFPolyService('testing')

    def test_product_of_linears(self):
        x = MonicPoly.x(2)
        x1 = MonicPoly(2, (1,))
        self.assertEqual(self.service.poly_mul(x, x1).coeffs, (0, 1))

    def test_divmod_exact(self):
        quotient, remainder = self.service.poly_divmod(MonicPoly(2, (0, 1)), MonicPoly.x(2))
        self.assertEqual(quotient.coeffs, (1,))
        self.assertEqual(remainder, ())

    def test_divmod_with_remainder(self):
        # x^2 + 1 = (x + 1)(x + 2) + 2 over F_3
        quotient, remainder = self.service.poly_divmod(MonicPoly(3, (1, 0)), MonicPoly(3, (1,)))
        self.assertEqual(quotient.coeffs, (2,))
        self.assertEqual(remainder, (2,))

    def test_divides(self):
        square = MonicPoly(2, (1, 0))  # x^2 + 1 = (x + 1)^2 over F_2
        self.assertTrue(self.service.divides(MonicPoly(2, (1,)), square))
        self.assertFalse(self.service.divides(MonicPoly.x(2), square))

    def test_mismatched_moduli(self):
        with self.assertRaises(UsageError):
            self.service.poly_mul(MonicPoly.x(2), MonicPoly.x(3))
        with self.assertRaises(UsageError):
            self.service.poly_divmod(MonicPoly.x(2), MonicPoly.x(3))

    def test_unrank_bounds(self):
        self.assertEqual(self.service.unrank(3, 2, 5).coeffs, (2, 1))
        with self.assertRaises(UsageError):
            self.service.unrank(2, 3, 8)
        with self.assertRaises(UsageError):
            self.service.unrank(2, -1, 0)

    def test_rank_roundtrip(self):
        for p, n in ((2, 6), (3, 4), (5, 3)):
            for k in range(p ** n):
                self.assertEqual(self.service.rank(self.service.unrank(p, n, k)), k)

    @settings(max_examples=60, deadline=None)
    @given(data=st.data(), p=st.sampled_from([2, 3, 5, 7]))
    def test_division_identity(self, data, p):
        a = data.draw(poly_strategy(p, 8))
        b = data.draw(poly_strategy(p, 5))
        quotient, remainder = self.service.poly_divmod(a, b)
        self.assertLessEqual(len(remainder), b.degree)
        if a.degree >= b.degree:
            product = self.service.poly_mul(quotient, b).full_coeffs
            padded = list(remainder) + [0] * (len(product) - len(remainder))
            self.assertEqual(tuple((x + y) % p for x, y in zip(product, padded)), a.full_coeffs)

    def test_is_irreducible_matches_sympy(self):
        for p, top in ((2, 7), (3, 4), (5, 3)):
            for n in range(1, top + 1):
                for poly in self.service.iter_degree(p, n):
                    expected = bool(gf_irreducible_p(list(reversed(poly.full_coeffs)), p, ZZ))
                    self.assertEqual(self.service.is_irreducible(poly), expected, str(poly))


class TestSpfTable(unittest.TestCase):
    """Polynomial sieve"""

    @classmethod
    def setUpClass(cls):
        cls.service = GFPolyService('testing')
        cls.table2 = cls.service.build_spf(2, 10)
        cls.table3 = GFPolyService('testing').build_spf(3, 6)

    def test_layout(self):
        self.assertEqual(self.table2.offsets[:4], [0, 1, 3, 7])
        self.assertEqual(self.table2.size, 2 ** 11 - 1)
        poly = MonicPoly(2, (1, 1))
        self.assertEqual(self.table2.index_of(poly), 6)
        self.assertEqual(self.table2.poly_at(6), poly)
        self.assertEqual(self.table2.degree_of(6), 2)

    def test_prime_counts(self):
        for d, expected in enumerate(IRREDUCIBLE_F2, start=1):
            self.assertEqual(len(self.table2.prime_indices(d)), expected)
        for d, expected in enumerate(IRREDUCIBLE_F3, start=1):
            self.assertEqual(len(self.table3.prime_indices(d)), expected)

    def test_prime_flags_match_sympy(self):
        for index in range(1, self.table3.size):
            poly = self.table3.poly_at(index)
            expected = bool(gf_irreducible_p(list(reversed(poly.full_coeffs)), 3, ZZ))
            self.assertEqual(self.table3.is_prime_index(index), expected, str(poly))

    def test_factorize_expand(self):
        for table in (self.table2, self.table3):
            for index in range(table.size):
                poly = table.poly_at(index)
                factorization = self.service.factorize(poly, table)
                self.assertEqual(factorization.degree, poly.degree)
                self.assertTrue(all(table.is_prime_index(prime) for prime, _ in factorization.factors))
                self.assertEqual(self.service.expand(factorization, table), poly)

    @settings(max_examples=80, deadline=None)
    @given(data=st.data())
    def test_factorization_of_product_is_union(self, data):
        a = data.draw(poly_strategy(2, 5))
        b = data.draw(poly_strategy(2, 5))
        product = self.service.poly_mul(a, b)
        joined = (self.service.factorize(a, self.table2).degrees
                  + self.service.factorize(b, self.table2).degrees)
        self.assertEqual(self.service.factorization_type(product, self.table2),
                         Partition.from_parts(joined))

    def test_subset_masks_match_divisors(self):
        masks = self.service.subset_masks(self.table2, 6)
        self.assertEqual(int(masks[6]), 0b101)
        for index in range(self.table2.offsets[7]):
            poly = self.table2.poly_at(index)
            for b in range(poly.degree + 1):
                has = any(self.service.divides(d, poly) for d in self.service.iter_degree(2, b))
                self.assertEqual(bool((int(masks[index]) >> b) & 1), has, f"{poly} b={b}")

    def test_multiplicity_flags(self):
        squarefree, squarefull = self.service.multiplicity_flags(self.table2, 8)
        self.assertTrue(squarefull[3])
        self.assertFalse(squarefree[3])
        self.assertTrue(squarefree[5])
        self.assertFalse(squarefull[5])
        for index in range(self.table2.offsets[9]):
            factorization = self.service.factorize_index(index, self.table2)
            self.assertEqual(bool(squarefree[index]), factorization.is_squarefree)
            self.assertEqual(bool(squarefull[index]), factorization.is_squarefull)

    def test_smallest_prime_degrees(self):
        degrees = self.service.smallest_prime_degrees(self.table2, 3)
        self.assertEqual(int((degrees == 3).sum()), 2)
        self.assertEqual(int((degrees == 1).sum()), 6)

    def test_type_census_total(self):
        census = self.service.type_census(self.table3, 4)
        self.assertEqual(sum(census.values()), 81)
        self.assertEqual(census[Partition((4,))], 18)

    def test_subset_masks_word_limit(self):
        with self.assertRaises(UsageError):
            self.service.subset_masks(self.table2, 64)


class TestSieveLimits(unittest.TestCase):
    """Budgets and caching"""

    def test_non_prime_modulus(self):
        with self.assertRaises(UsageError):
            GFPolyService('testing').build_spf(4, 2)

    def test_entry_budget(self):
        service = GFPolyService({'MAX_TABLE_ENTRIES': 100})
        with self.assertRaises(ResourceLimitError) as ctx:
            service.build_spf(2, 7)
        self.assertEqual(ctx.exception.details['entries'], 255)

    def test_memory_check(self):
        memory = namedtuple('memory', 'available')(0)
        with patch('app.services.gfpoly_service.psutil.virtual_memory', return_value=memory):
            with self.assertRaises(ResourceLimitError):
                GFPolyService('testing').build_spf(2, 4)

    def test_larger_table_is_reused(self):
        service = GFPolyService('testing')
        big = service.build_spf(2, 8)
        self.assertIs(service.build_spf(2, 5), big)
        self.assertIs(service.build_spf(2, 8), big)

    def test_table_is_read_only(self):
        table = GFPolyService('testing').build_spf(2, 3)
        with self.assertRaises(ValueError):
            table.spf[1] = 0


def run_tests():
    """Run all tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for test_class in (TestArithmetic, TestSpfTable, TestSieveLimits):
        suite.addTests(loader.loadTestsFromTestCase(test_class))
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    sys.exit(0 if run_tests() else 1)
