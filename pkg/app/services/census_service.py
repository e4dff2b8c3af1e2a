"""
Census Service
==============

Exact counts of the headline sets: H(n,b) (monic polynomials of degree n
with a divisor of degree b), M(2n) = H(2n,n), and T(n,b) (permutations of
S_n fixing a set of size b). Also the rough, squarefree and squarefull
censuses and the type-distribution discrepancy, each paired with a
brute-force oracle over the SpfTable or over S_n.

Every exact count is a sum over partitions λ with a b-subpartition; the
sweep computes the whole b-profile at once and caches it per (kind, q, n).
"""

import itertools
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import mpmath
import numpy as np
from sympy import isprime

from app.config import resolve_settings
from app.exceptions import ResourceLimitError, UsageError
from app.models.lab_models import AsymptoticParams, CountReport, Factorization, Partition
from app.services.gfpoly_service import GFPolyService
from app.services.partition_service import PartitionService, subset_sum_mask
from app.services.primecount_service import PrimeCountService, is_prime_power, multichoose


def _series_mul(a: List[int], b: List[int], top: int) -> List[int]:
    out = [0] * (top + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(0, min(len(b), top + 1 - i)):
                out[i + j] += x * b[j]
    return out


def _series_power(base: List[int], alpha: int, top: int) -> List[int]:
    """(Σ a_k x^k)^alpha truncated at x^top, for a_0 = 1 (Miller's recurrence)."""
    out = [1] + [0] * top
    for n in range(1, top + 1):
        acc = 0
        for k in range(1, min(n, len(base) - 1) + 1):
            if base[k]:
                acc += ((alpha + 1) * k - n) * base[k] * out[n - k]
        out[n] = acc // n
    return out


class CensusService:
    """
    Service untuk exact censuses

    Features:
    - |H(n,b)|, |M(2n)|, |T(n,b)| and the squarefree |H*(n,b)|
    - Brute-force oracles over F_p[x] and S_n
    - Rough, squarefull and τ-weighted squarefull counts
    - Type-distribution discrepancy against the cycle-type law
    """

    def __init__(self, config=None, gfpoly: Optional[GFPolyService] = None,
                 partitions: Optional[PartitionService] = None,
                 primecount: Optional[PrimeCountService] = None):
        """Initialize service dengan shared sub-services"""
        self.logger = logging.getLogger(__name__)
        settings = resolve_settings(config)

        self.default_config = {
            'brute_force_limit': 10 ** 7,
            'brute_t_max_n': 9,
            'threads': 1,
            'precision_dps': 50
        }
        self.config = dict(self.default_config)
        self.config.update({
            'brute_force_limit': settings.get('BRUTE_FORCE_LIMIT', 10 ** 7),
            'brute_t_max_n': settings.get('BRUTE_T_MAX_N', 9),
            'threads': settings.get('THREADS', 1),
            'precision_dps': settings.get('PRECISION_DPS', 50)
        })

        self.gfpoly = gfpoly or GFPolyService(config)
        self.partitions = partitions or PartitionService(config)
        self.primecount = primecount or PrimeCountService(config)
        self.params = AsymptoticParams(self.config['precision_dps'])

        self._profiles: Dict[Tuple[str, int, int], List[int]] = {}
        self._cycle_types: Dict[int, Dict[Partition, int]] = {}

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _check_q(self, q: int) -> None:
        if not is_prime_power(q):
            raise UsageError(f"q must be a prime power >= 2, got {q}")

    @staticmethod
    def _check_b(n: int, b: int) -> None:
        if n < 0:
            raise UsageError(f"n must be nonnegative, got {n}")
        if not 0 <= b <= n:
            raise UsageError(f"b must lie in [0, {n}], got {b}")

    def _check_brute(self, p: int, n: int) -> None:
        if not isprime(p):
            raise UsageError(f"brute force supports prime p only, got {p}")
        if p ** n > self.config['brute_force_limit']:
            raise ResourceLimitError(
                f"brute force over {p}^{n} polynomials exceeds the limit {self.config['brute_force_limit']}",
                {'p': p, 'n': n}
            )

    def _profile(self, kind: str, q: int, n: int) -> List[int]:
        key = (kind, q, n)
        if key not in self._profiles:
            if kind == 'T':
                factors = self.partitions.class_size_weights(n)
            else:
                rows = self.primecount.type_weight_table(q, n, squarefree=(kind == 'Hsf'))
                factors = self.partitions.uniform_weights(n, rows)
            profile = self.partitions.weighted_profile(n, factors, self.config['threads'])
            self._profiles[key] = self.partitions.profile_by_b(n, profile)
        return self._profiles[key]

    def _report(self, kind: str, n: int, b: int, count: int, total: int, q: Optional[int]) -> CountReport:
        return CountReport(kind=kind, n=n, b=b, count=count, total=total, q=q, params=self.params)

    # ------------------------------------------------------------------
    # Headline counts
    # ------------------------------------------------------------------

    def count_H(self, q: int, n: int, b: int) -> CountReport:
        """|H(n,b)| = Σ_{λ ∈ Λ(n,b)} π_q(n, λ)"""
        self._check_q(q)
        self._check_b(n, b)
        count = self._profile('H', q, n)[b]
        return self._report('H', n, b, count, q ** n, q)

    def count_M(self, q: int, total_degree: int) -> CountReport:
        """|M(2n)| = |H(2n, n)|"""
        if total_degree < 0 or total_degree % 2:
            raise UsageError(f"M(2n) needs an even nonnegative degree, got {total_degree}")
        half = total_degree // 2
        report = self.count_H(q, total_degree, half)
        return self._report('M', total_degree, half, report.count, report.total, q)

    def count_T(self, n: int, b: int) -> CountReport:
        """|T(n,b)| = n! Σ_{λ ∈ Λ(n,b)} P(λ), accumulated as class sizes."""
        self._check_b(n, b)
        count = self._profile('T', 0, n)[b]
        return self._report('T', n, b, count, math.factorial(n), None)

    def count_H_squarefree(self, q: int, n: int, b: int) -> CountReport:
        """|H*(n,b)|: squarefree members of H(n,b)."""
        self._check_q(q)
        self._check_b(n, b)
        count = self._profile('Hsf', q, n)[b]
        return self._report('Hsf', n, b, count, q ** n, q)

    # ------------------------------------------------------------------
    # Brute-force oracles
    # ------------------------------------------------------------------

    def _degree_masks(self, p: int, n: int) -> np.ndarray:
        table = self.gfpoly.build_spf(p, n)
        masks = self.gfpoly.subset_masks(table, n)
        return masks[table.degree_slice(n)]

    def brute_H_profile(self, p: int, n: int, squarefree: bool = False) -> List[int]:
        """Brute-force |H(n,b)| (or |H*(n,b)|) for every b, one table pass."""
        self._check_brute(p, n)
        masks = self._degree_masks(p, n)
        if squarefree:
            table = self.gfpoly.build_spf(p, n)
            flags, _ = self.gfpoly.multiplicity_flags(table, n)
            masks = masks[flags[table.degree_slice(n)]]
        one = np.uint64(1)
        return [int(np.count_nonzero((masks >> np.uint64(b)) & one)) for b in range(n + 1)]

    def brute_H(self, p: int, n: int, b: int) -> int:
        self._check_b(n, b)
        return self.brute_H_profile(p, n)[b]

    def brute_H_squarefree(self, p: int, n: int, b: int) -> int:
        self._check_b(n, b)
        return self.brute_H_profile(p, n, squarefree=True)[b]

    def _cycle_type_census(self, n: int) -> Dict[Partition, int]:
        if n not in self._cycle_types:
            census: Dict[Partition, int] = {}
            self.logger.info(f"Enumerating S_{n} ({math.factorial(n)} permutations)")
            for perm in itertools.permutations(range(n)):
                seen = [False] * n
                lengths = []
                for start in range(n):
                    if seen[start]:
                        continue
                    length, i = 0, start
                    while not seen[i]:
                        seen[i] = True
                        i = perm[i]
                        length += 1
                    lengths.append(length)
                key = Partition.from_parts(lengths)
                census[key] = census.get(key, 0) + 1
            self._cycle_types[n] = census
        return self._cycle_types[n]

    def brute_T(self, n: int, b: int) -> int:
        """Enumerate S_n and test each cycle type for a b-subpartition."""
        self._check_b(n, b)
        if n > self.config['brute_t_max_n']:
            raise ResourceLimitError(
                f"brute_T enumerates {n}! permutations; limit is n <= {self.config['brute_t_max_n']}",
                {'n': n}
            )
        return sum(
            count for partition, count in self._cycle_type_census(n).items()
            if self.partitions.has_subpartition(partition, b)
        )

    # ------------------------------------------------------------------
    # Rough numbers
    # ------------------------------------------------------------------

    def count_rough(self, q: int, n: int, d: int) -> int:
        """Monic F of degree n whose prime divisors all have degree >= d."""
        self._check_q(q)
        if not 1 <= d <= n:
            raise UsageError(f"need 1 <= d <= n, got d={d}, n={n}")
        pi = self.primecount.counter(q)
        series = [1] + [0] * n
        for e in range(d, n + 1):
            count = pi(e)
            updated = series[:]
            for t in range(e, n + 1):
                acc = 0
                for k in range(1, t // e + 1):
                    acc += series[t - e * k] * multichoose(count, k)
                updated[t] += acc
            series = updated
        return series[n]

    def brute_rough(self, p: int, n: int, d: int) -> int:
        self._check_brute(p, n)
        if not 1 <= d <= n:
            raise UsageError(f"need 1 <= d <= n, got d={d}, n={n}")
        table = self.gfpoly.build_spf(p, n)
        return int(np.count_nonzero(self.gfpoly.smallest_prime_degrees(table, n) >= d))

    def rough_product_discrepancy(self, q: int, n: int, d: int) -> Dict[str, Fraction]:
        """
        Exact rough count against q^n ∏_{deg P < d} (1 - 1/|P|).

        The product identity holds only in the limit; the difference is
        reported exactly.
        """
        count = self.count_rough(q, n, d)
        pi = self.primecount.counter(q)
        product = Fraction(q ** n)
        for e in range(1, d):
            product *= (1 - Fraction(1, q ** e)) ** pi(e)
        return {
            'count': Fraction(count),
            'product': product,
            'discrepancy': count - product,
            'relative': (count - product) / product
        }

    # ------------------------------------------------------------------
    # Squarefull numbers
    # ------------------------------------------------------------------

    def squarefull_series(self, q: int, max_degree: int) -> List[int]:
        """c_n for 0 <= n <= max_degree, from (1 - q u^6)/((1 - q u^2)(1 - q u^3))."""
        self._check_q(q)
        c: List[int] = []
        for n in range(max_degree + 1):
            value = (1 if n == 0 else 0) - (q if n == 6 else 0)
            if n >= 2:
                value += q * c[n - 2]
            if n >= 3:
                value += q * c[n - 3]
            if n >= 5:
                value -= q * q * c[n - 5]
            c.append(value)
        return c

    def count_squarefull(self, q: int, n: int) -> int:
        if n < 0:
            raise UsageError(f"n must be nonnegative, got {n}")
        return self.squarefull_series(q, n)[n]

    def brute_squarefull(self, p: int, n: int) -> int:
        self._check_brute(p, n)
        table = self.gfpoly.build_spf(p, n)
        _, squarefull = self.gfpoly.multiplicity_flags(table, n)
        return int(np.count_nonzero(squarefull[table.degree_slice(n)]))

    def squarefull_tail(self, q: int, C: int, horizon: int = 60) -> Tuple[Fraction, float]:
        """
        Enclosure of Σ_{deg F >= C, F squarefull} 1/|F|.

        Degrees C..C+horizon-1 are summed exactly; beyond uses
        c_n <= (n/3 + 1) q^{n/2}.
        """
        if C < 0:
            raise UsageError(f"C must be nonnegative, got {C}")
        H = C + horizon
        series = self.squarefull_series(q, H - 1)
        exact = sum((Fraction(series[n], q ** n) for n in range(C, H)), Fraction(0))
        with mpmath.workdps(self.config['precision_dps']):
            r = 1 / mpmath.sqrt(q)
            tail = r ** H * ((1 + mpmath.mpf(H) / 3) / (1 - r) + r / (3 * (1 - r) ** 2))
            upper = float(mpmath.mpf(exact.numerator) / exact.denominator + tail)
        return exact, upper

    def tau_squarefull_sum(self, q: int, max_degree: int = 40) -> Fraction:
        """Σ_{F squarefull, deg F <= max_degree} τ(F)/|F|."""
        self._check_q(q)
        pi = self.primecount.counter(q)
        total = [1] + [0] * max_degree
        for e in range(1, max_degree // 2 + 1):
            top = max_degree // e
            local = [1, 0] + [k + 1 for k in range(2, top + 1)]
            powered = _series_power(local, pi(e), top)
            spread = [0] * (max_degree + 1)
            for k, coeff in enumerate(powered):
                spread[k * e] = coeff
            total = _series_mul(total, spread, max_degree)
        return sum((Fraction(c, q ** n) for n, c in enumerate(total)), Fraction(0))

    def squarefull_pairs(self, q: int, n: int, b: int) -> List[List[int]]:
        """
        pairs[k][c]: number of (F'', D'') with F'' squarefull of degree k and
        D'' | F'' of degree c, for k <= n and c <= b.
        """
        pi = self.primecount.counter(q)
        width = b + 1
        total = [[0] * width for _ in range(n + 1)]
        total[0][0] = 1
        for e in range(1, n // 2 + 1):
            local = [[0] * width for _ in range(n + 1)]
            local[0][0] = 1
            for m in range(2, n // e + 1):
                for j in range(m + 1):
                    if j * e <= b:
                        local[m * e][j * e] += 1
            base, exponent = local, pi(e)
            result = [[0] * width for _ in range(n + 1)]
            result[0][0] = 1
            while exponent:
                if exponent & 1:
                    result = self._bivariate_mul(result, base, n, b)
                exponent >>= 1
                if exponent:
                    base = self._bivariate_mul(base, base, n, b)
            total = self._bivariate_mul(total, result, n, b)
        return total

    @staticmethod
    def _bivariate_mul(a: List[List[int]], b: List[List[int]], n: int, width: int) -> List[List[int]]:
        out = [[0] * (width + 1) for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(width + 1):
                x = a[i][j]
                if not x:
                    continue
                for k in range(n + 1 - i):
                    row = b[k]
                    for c in range(width + 1 - j):
                        if row[c]:
                            out[i + k][j + c] += x * row[c]
        return out

    def squarefull_reduction_check(self, q: int, n: int, b: int) -> Dict[str, int]:
        """
        |H(n,b)| <= Σ_{k, c} pairs[k][c] · |H*(n - k, b - c)|.

        F = F'F'' with F' squarefree and F'' squarefull; a divisor of degree
        b splits as D'D'' with D' | F' and D'' | F''.
        """
        self._check_b(n, b)
        lhs = self.count_H(q, n, b).count
        pairs = self.squarefull_pairs(q, n, b)
        rhs = 0
        for k in range(n + 1):
            for c in range(b + 1):
                weight = pairs[k][c]
                if weight and 0 <= b - c <= n - k:
                    rhs += weight * self.count_H_squarefree(q, n - k, b - c).count
        return {'q': q, 'n': n, 'b': b, 'lhs': lhs, 'rhs': rhs, 'holds': lhs <= rhs}

    # ------------------------------------------------------------------
    # Distribution checks
    # ------------------------------------------------------------------

    def bbr_discrepancy(self, q: int, n: int) -> Tuple[Fraction, Partition]:
        """max_{λ ⊢ n} |π_q(n,λ) - P(λ) q^n| / q^{n-1} and its arg-max."""
        self._check_q(q)
        if n < 1:
            raise UsageError(f"n must be >= 1, got {n}")
        self.partitions.check_budget(n)
        scale = Fraction(1, q ** (n - 1))
        best, arg = Fraction(-1), None
        for partition in self.partitions.enumerate_partitions(n):
            gap = abs(self.primecount.count_with_type(q, partition)
                      - self.partitions.cycle_type_probability(partition) * q ** n) * scale
            if gap > best:
                best, arg = gap, partition
        return best, arg

    def bbr_sweep(self, n: int, q_max: int = 1024) -> Dict[str, object]:
        """bbr_discrepancy over every prime power q <= q_max; reports the sup."""
        rows = []
        for q in range(2, q_max + 1):
            if is_prime_power(q):
                value, arg = self.bbr_discrepancy(q, n)
                rows.append((q, value, arg))
        sup_q, sup_value, sup_arg = max(rows, key=lambda row: row[1])
        self.logger.debug(f"bbr sweep n={n}: sup {float(sup_value):.6g} at q={sup_q}")
        return {'n': n, 'rows': rows, 'sup': sup_value, 'sup_q': sup_q, 'sup_partition': sup_arg}

    def tau_and_divisor_profile(self, factorization: Factorization) -> Tuple[int, List[int]]:
        """(τ(F), [τ_0(F), ..., τ_{deg F}(F)])"""
        counts = self.partitions.subset_sum_counts(factorization.degree_multiplicities)
        return sum(counts), counts

    def divisor_sum_ratio(self, q: int, n: int, b: int) -> Fraction:
        """|H(n,b)| / ((q^n/b^2) Σ_{deg A <= b/8} L(A)/|A|)"""
        if b < 1:
            raise UsageError(f"b must be >= 1, got {b}")
        lhs = self.count_H(q, n, b).count
        inner = Fraction(0)
        for t in range(b // 8 + 1):
            for partition in self.partitions.enumerate_partitions(t):
                L = bin(subset_sum_mask(partition.multiplicities)).count('1')
                inner += Fraction(self.primecount.count_with_type(q, partition) * L, q ** t)
        return Fraction(lhs * b * b) / (q ** n * inner)
