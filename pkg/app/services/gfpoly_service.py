"""
GF(p) Polynomial Service
========================

Arithmetic, rank encoding, sieving and factorization of monic polynomials
over a prime field. The smallest-prime-divisor table built here is the
engine behind every brute-force census in the laboratory.

Polynomials of degree n are ranked by the base-p value of their non-leading
coefficients (lowest degree first); a table addresses degree n at
offset(n) = Σ_{m<n} p^m, so index 0 is the constant polynomial 1.
"""

import logging
from collections import Counter
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import psutil
from sympy import isprime

from app.config import resolve_settings
from app.exceptions import ResourceLimitError, UsageError
from app.models.lab_models import (
    Factorization, MonicPoly, Partition, SpfTable, degree_offset
)


def _digits(ranks: np.ndarray, p: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((len(ranks), 0), dtype=np.int64)
    powers = p ** np.arange(n, dtype=np.int64)
    return (ranks[:, None] // powers[None, :]) % p


class GFPolyService:
    """
    Service untuk monic polynomials over F_p

    Features:
    - Multiplication and division with remainder
    - Rank / unrank bijection M_n <-> [0, p^n)
    - Polynomial Eratosthenes sieve (SpfTable)
    - Factorization by pointer chasing through the table
    - Vectorized whole-table statistics for brute-force censuses
    """

    def __init__(self, config=None):
        """Initialize service dengan budgets dari configuration"""
        self.logger = logging.getLogger(__name__)
        settings = resolve_settings(config)

        self.default_config = {
            'max_table_entries': 10 ** 8,
            'chunk_rows': 1 << 16,
            'memory_headroom': 0.8
        }
        self.config = dict(self.default_config)
        self.config.update({
            'max_table_entries': settings.get('MAX_TABLE_ENTRIES', 10 ** 8),
            'chunk_rows': settings.get('SIEVE_CHUNK_ROWS', 1 << 16),
            'memory_headroom': settings.get('MEMORY_HEADROOM', 0.8)
        })

        self._tables: Dict[Tuple[int, int], SpfTable] = {}

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def poly_mul(self, a: MonicPoly, b: MonicPoly) -> MonicPoly:
        """Product of two monic polynomials (convolution mod p)."""
        if a.p != b.p:
            raise UsageError(f"mismatched moduli: {a.p} and {b.p}")
        p = a.p
        left, right = a.full_coeffs, b.full_coeffs
        out = [0] * (len(left) + len(right) - 1)
        for i, x in enumerate(left):
            if x:
                for j, y in enumerate(right):
                    out[i + j] += x * y
        return MonicPoly(p, tuple(c % p for c in out[:-1]))

    def poly_divmod(self, a: MonicPoly, b: MonicPoly) -> Tuple[MonicPoly, Tuple[int, ...]]:
        """
        Division of monic a by monic b.

        Returns:
            (quotient, remainder coefficients lowest degree first, trailing zeros stripped)
        """
        if a.p != b.p:
            raise UsageError(f"mismatched moduli: {a.p} and {b.p}")
        p = a.p
        if a.degree < b.degree:
            rem = list(a.full_coeffs)
            return MonicPoly.one(p), tuple(rem)
        divisor = b.full_coeffs
        rem = list(a.full_coeffs)
        quotient = [0] * (a.degree - b.degree + 1)
        for i in range(a.degree - b.degree, -1, -1):
            lead = rem[i + b.degree] % p
            quotient[i] = lead
            if lead:
                for j, c in enumerate(divisor):
                    rem[i + j] = (rem[i + j] - lead * c) % p
        rem = rem[:b.degree]
        while rem and rem[-1] == 0:
            rem.pop()
        return MonicPoly(p, tuple(quotient[:-1])), tuple(rem)

    def divides(self, d: MonicPoly, f: MonicPoly) -> bool:
        return d.degree <= f.degree and not self.poly_divmod(f, d)[1]

    def rank(self, poly: MonicPoly) -> int:
        return poly.rank

    def unrank(self, p: int, n: int, k: int) -> MonicPoly:
        """The degree-n monic polynomial with rank k."""
        if n < 0:
            raise UsageError(f"degree must be nonnegative, got {n}")
        if not 0 <= k < p ** n:
            raise UsageError(f"rank {k} outside [0, {p}^{n})")
        return MonicPoly.from_dict({'p': p, 'n': n, 'k': k})

    def is_irreducible(self, poly: MonicPoly) -> bool:
        """Trial division by every monic polynomial of degree <= n/2."""
        n = poly.degree
        if n == 0:
            return False
        for d in range(1, n // 2 + 1):
            for k in range(poly.p ** d):
                if self.divides(self.unrank(poly.p, d, k), poly):
                    return False
        return True

    # ------------------------------------------------------------------
    # Sieve
    # ------------------------------------------------------------------

    def _check_budget(self, p: int, N: int) -> Tuple[int, np.dtype]:
        entries = degree_offset(p, N + 1)
        if entries > self.config['max_table_entries']:
            raise ResourceLimitError(
                f"SpfTable for p={p}, N={N} needs {entries} entries "
                f"(budget {self.config['max_table_entries']})",
                {'p': p, 'N': N, 'entries': entries}
            )
        dtype = np.dtype(np.int32) if entries < 2 ** 31 - 1 else np.dtype(np.int64)
        needed = 2 * entries * dtype.itemsize
        available = psutil.virtual_memory().available * self.config['memory_headroom']
        if needed > available:
            raise ResourceLimitError(
                f"SpfTable for p={p}, N={N} needs {needed // 2 ** 20} MiB, "
                f"{int(available) // 2 ** 20} MiB available",
                {'p': p, 'N': N, 'bytes': needed}
            )
        return entries, dtype

    def build_spf(self, p: int, N: int) -> SpfTable:
        """
        Polynomial Eratosthenes up to degree N.

        Args:
            p (int): prime modulus
            N (int): maximal degree

        Returns:
            SpfTable: immutable table (cached per (p, N))
        """
        if not isprime(p):
            raise UsageError(f"brute force supports prime p only, got {p}")
        if N < 0:
            raise UsageError(f"degree must be nonnegative, got {N}")
        key = (p, N)
        if key in self._tables:
            return self._tables[key]
        for (tp, tN), table in self._tables.items():
            if tp == p and tN >= N:
                return table

        entries, dtype = self._check_budget(p, N)
        self.logger.info(f"Building SpfTable p={p} N={N} ({entries} entries)")

        offsets = [degree_offset(p, n) for n in range(N + 2)]
        spf = np.full(entries, -1, dtype=dtype)
        cofactor = np.zeros(entries, dtype=dtype)
        chunk_rows = self.config['chunk_rows']

        for d in range(1, N + 1):
            start, stop = offsets[d], offsets[d + 1]
            block = spf[start:stop]
            fresh = np.flatnonzero(block == -1)
            # Unmarked entries of degree d have no divisor of smaller degree: primes
            block[fresh] = (fresh + start).astype(dtype)
            cofactor[start + fresh] = 0
            if 2 * d > N:
                continue

            prime_ranks = fresh.astype(np.int64)
            self.logger.debug(f"degree {d}: {len(prime_ranks)} primes")

            # Cofactors G whose smallest prime has degree >= d
            candidates = {}
            for e in range(d, N - d + 1):
                g_spf = spf[offsets[e]:offsets[e + 1]]
                candidates[e] = np.flatnonzero((g_spf == -1) | (g_spf >= offsets[d])).astype(np.int64)

            for prank in prime_ranks.tolist():
                p_full = np.array(list(_digits(np.array([prank], dtype=np.int64), p, d)[0]) + [1], dtype=np.int64)
                p_index = offsets[d] + prank
                for e, g_ranks in candidates.items():
                    if len(g_ranks) == 0:
                        continue
                    out_deg = d + e
                    powers = p ** np.arange(out_deg, dtype=np.int64)
                    for lo in range(0, len(g_ranks), chunk_rows):
                        ranks = g_ranks[lo:lo + chunk_rows]
                        g_full = np.concatenate(
                            [_digits(ranks, p, e), np.ones((len(ranks), 1), dtype=np.int64)], axis=1
                        )
                        product = np.zeros((len(ranks), out_deg + 1), dtype=np.int64)
                        for i, c in enumerate(p_full.tolist()):
                            if c:
                                product[:, i:i + e + 1] += c * g_full
                        product %= p
                        target = offsets[out_deg] + product[:, :out_deg] @ powers
                        unset = spf[target] == -1
                        if not unset.any():
                            continue
                        spf[target[unset]] = p_index
                        cofactor[target[unset]] = (offsets[e] + ranks[unset]).astype(dtype)

        spf.setflags(write=False)
        cofactor.setflags(write=False)
        table = SpfTable(p=p, max_degree=N, spf=spf, cofactor=cofactor, offsets=offsets)
        self._tables = {key: table}
        self.logger.info(f"SpfTable p={p} N={N} ready")
        return table

    # ------------------------------------------------------------------
    # Factorization
    # ------------------------------------------------------------------

    def factorize(self, poly: MonicPoly, table: SpfTable) -> Factorization:
        """Factor by repeatedly stripping the smallest prime divisor."""
        index = table.index_of(poly)
        return self.factorize_index(index, table)

    def factorize_index(self, index: int, table: SpfTable) -> Factorization:
        counts = Counter()
        while index != 0:
            counts[int(table.spf[index])] += 1
            index = int(table.cofactor[index])
        primes = sorted(counts)
        return Factorization(
            factors=tuple((prime, counts[prime]) for prime in primes),
            prime_degrees=tuple(table.degree_of(prime) for prime in primes),
            p=table.p
        )

    def factorization_type(self, poly: MonicPoly, table: Optional[SpfTable] = None) -> Partition:
        """λ_F, the prime degrees of F with multiplicity."""
        if table is None:
            table = self.build_spf(poly.p, poly.degree)
        return Partition(self.factorize(poly, table).degrees)

    def expand(self, factorization: Factorization, table: SpfTable) -> MonicPoly:
        """Multiply a factorization back out."""
        result = MonicPoly.one(table.p)
        for prime, mult in factorization.factors:
            poly = table.poly_at(prime)
            for _ in range(mult):
                result = self.poly_mul(result, poly)
        return result

    # ------------------------------------------------------------------
    # Whole-table statistics
    # ------------------------------------------------------------------

    def _degree_lookup(self, table: SpfTable) -> np.ndarray:
        degrees = np.zeros(table.size, dtype=np.int64)
        for n in range(table.max_degree + 1):
            degrees[table.degree_slice(n)] = n
        return degrees

    def subset_masks(self, table: SpfTable, max_degree: Optional[int] = None) -> np.ndarray:
        """
        Subset-sum bitsets of λ_F for every F of degree <= max_degree.

        Bit b of the result is set iff F has a monic divisor of degree b.
        Limited to degree 63 by the uint64 word.
        """
        top = table.max_degree if max_degree is None else max_degree
        if top > 63:
            raise UsageError("subset masks are limited to degree 63")
        stop = table.offsets[top + 1]
        degrees = self._degree_lookup(table)[:stop]
        masks = np.zeros(stop, dtype=np.uint64)
        masks[0] = 1
        for n in range(1, top + 1):
            block = table.degree_slice(n)
            spf = table.spf[block].astype(np.int64)
            cof = table.cofactor[block].astype(np.int64)
            base = masks[cof]
            masks[block] = base | (base << degrees[spf].astype(np.uint64))
        return masks

    def smallest_prime_degrees(self, table: SpfTable, n: int) -> np.ndarray:
        """deg P^-(F) for every F of degree n (n >= 1)."""
        degrees = self._degree_lookup(table)
        return degrees[table.spf[table.degree_slice(n)].astype(np.int64)]

    def multiplicity_flags(self, table: SpfTable, max_degree: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        (squarefree, squarefull) boolean arrays over indices of degree <= max_degree.
        """
        top = table.max_degree if max_degree is None else max_degree
        stop = table.offsets[top + 1]
        first_mult = np.zeros(stop, dtype=np.int64)
        rest = np.zeros(stop, dtype=np.int64)
        squarefree = np.zeros(stop, dtype=bool)
        squarefull = np.zeros(stop, dtype=bool)
        squarefree[0] = squarefull[0] = True
        spf_all = table.spf[:stop].astype(np.int64)
        for n in range(1, top + 1):
            block = table.degree_slice(n)
            spf = spf_all[block]
            cof = table.cofactor[block].astype(np.int64)
            repeat = (cof != 0) & (spf_all[cof] == spf)
            first_mult[block] = np.where(repeat, first_mult[cof] + 1, 1)
            rest[block] = np.where(repeat, rest[cof], cof)
            tail = rest[block]
            squarefree[block] = (first_mult[block] == 1) & squarefree[tail]
            squarefull[block] = (first_mult[block] >= 2) & squarefull[tail]
        return squarefree, squarefull

    def type_census(self, table: SpfTable, n: int) -> Counter:
        """Counter of λ_F over M_n by direct factorization."""
        census = Counter()
        block = table.degree_slice(n)
        for index in range(block.start, block.stop):
            census[Partition(self.factorize_index(index, table).degrees)] += 1
        return census

    def iter_degree(self, p: int, n: int) -> Iterable[MonicPoly]:
        for k in range(p ** n):
            yield self.unrank(p, n, k)
