"""
Divisor Statistics Service
==========================

Divisor clustering of a polynomial A: the set Ll(A) of divisor degrees,
L(A) = |Ll(A)|, the degree profile τ_d(A) and W(A) = Σ_d τ_d(A)^2.

For squarefree A all three depend only on the multiset of prime degrees, so
sums over squarefree A collapse to sums over partitions weighted by
∏_e C(π_q(e), m_e) q^{-e m_e}. That reduction drives the truncated sums
S(d), T(d,m), T_k(d,m) and the block-family sums built on DegreeIntervals.
"""

import itertools
import logging
import math
from fractions import Fraction
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import mpmath

from app.config import resolve_settings
from app.exceptions import ResourceLimitError, UsageError
from app.models.lab_models import (
    AsymptoticParams, DegreeIntervals, DivisorClustering, Factorization,
    LowerBoundFamily, Partition
)
from app.services.partition_service import PartitionService, subset_sum_mask
from app.services.primecount_service import PrimeCountService

ClusterInput = Union[Factorization, Partition, Sequence[int]]


def _descending_tuples(count: int, lo: int, hi: int) -> Iterator[Tuple[int, ...]]:
    if count == 0:
        yield ()
        return
    for first in range(hi, lo - 1, -1):
        for rest in _descending_tuples(count - 1, lo, first):
            yield (first,) + rest


class DivStatsService:
    """
    Service untuk divisor clustering statistics

    Features:
    - Ll(A), L(A), τ_d(A), W(A) for degree multisets and full factorizations
    - Bound checks on L with witnesses
    - Exact truncated sums over squarefree A via degree multisets
    - The block-count lower-bound family and its measured constants
    """

    def __init__(self, config=None, partitions: Optional[PartitionService] = None,
                 primecount: Optional[PrimeCountService] = None):
        """Initialize service dengan budgets dari configuration"""
        self.logger = logging.getLogger(__name__)
        settings = resolve_settings(config)

        self.default_config = {
            'max_total_degree': 24,
            'max_family_size': 10 ** 6,
            'precision_dps': 50,
            'split_limit': 10
        }
        self.config = dict(self.default_config)
        self.config.update({
            'max_total_degree': settings.get('MAX_TOTAL_DEGREE', 24),
            'max_family_size': settings.get('MAX_FAMILY_SIZE', 10 ** 6),
            'precision_dps': settings.get('PRECISION_DPS', 50)
        })

        self.partitions = partitions or PartitionService(config)
        self.primecount = primecount or PrimeCountService(config)
        self.params = AsymptoticParams(self.config['precision_dps'])

    # ------------------------------------------------------------------
    # Clustering
    # ------------------------------------------------------------------

    def clustering(self, source: ClusterInput) -> DivisorClustering:
        """
        Divisor clustering of a factorization, or of a squarefree A given by
        its prime-degree multiset.
        """
        if isinstance(source, Factorization):
            items = source.degree_multiplicities
        else:
            parts = source.parts if isinstance(source, Partition) else tuple(source)
            if any(d < 1 for d in parts):
                raise UsageError("prime degrees must be positive")
            items = [(d, 1) for d in parts]

        pooled: Dict[int, int] = {}
        for d, m in items:
            pooled[d] = pooled.get(d, 0) + m
        degree = sum(d * m for d, m in items)
        return DivisorClustering(
            degree=degree,
            Ll=subset_sum_mask(pooled),
            tau_d=self.partitions.subset_sum_counts(items)
        )

    def check_L_bounds(self, factorization: Factorization) -> Dict[str, object]:
        """
        Evaluate the three upper bounds on L(A):

        1. L(A) <= min(τ(A), deg A + 1)
        2. L(AB) <= τ(B) L(A) for coprime A, B (every split of the primes)
        3. L(P_1...P_k) <= 2^{k-j} (deg(P_1...P_j) + 1) for 0 <= j <= k,
           primes listed with multiplicity in increasing degree
        """
        whole = self.clustering(factorization)
        L = whole.L

        bound1 = min(whole.tau, whole.degree + 1)
        ok1 = L <= bound1

        pairs = factorization.degree_multiplicities
        ok2, witness2 = True, None
        if len(pairs) <= self.config['split_limit']:
            splits = itertools.product((0, 1), repeat=len(pairs))
        else:
            self.logger.debug(f"L bounds: {len(pairs)} primes > split_limit {self.config['split_limit']}, "
                              f"bound 2 checks prefix splits only")
            splits = ([1] * i + [0] * (len(pairs) - i) for i in range(len(pairs) + 1))
        for split in splits:
            left = Factorization.from_degrees(pair for pair, side in zip(pairs, split) if side == 0)
            right = Factorization.from_degrees(pair for pair, side in zip(pairs, split) if side == 1)
            tau_right = self.clustering(right).tau
            if L > tau_right * self.clustering(left).L:
                ok2, witness2 = False, {'A': list(left.degrees), 'B': list(right.degrees)}
                break

        primes = sorted(factorization.degrees)
        k = len(primes)
        prefix, best, best_j = 0, 2 ** k, 0
        for j in range(1, k + 1):
            prefix += primes[j - 1]
            value = 2 ** (k - j) * (prefix + 1)
            if value < best:
                best, best_j = value, j
        ok3 = L <= best

        return {
            'degrees': list(factorization.degrees),
            'L': L,
            'tau': whole.tau,
            'bound1': bound1,
            'bound1_ok': ok1,
            'bound2_ok': ok2,
            'bound2_exhaustive': len(pairs) <= self.config['split_limit'],
            'bound2_witness': witness2,
            'bound3': best,
            'bound3_j': best_j,
            'bound3_ok': ok3,
            'passed': ok1 and ok2 and ok3
        }

    # ------------------------------------------------------------------
    # Truncated sums over squarefree A
    # ------------------------------------------------------------------

    def _check_degree(self, max_total_degree: int) -> None:
        if max_total_degree < 0:
            raise UsageError(f"max_total_degree must be nonnegative, got {max_total_degree}")
        if max_total_degree > self.config['max_total_degree']:
            raise ResourceLimitError(
                f"max_total_degree {max_total_degree} exceeds the budget {self.config['max_total_degree']}",
                {'max_total_degree': max_total_degree}
            )

    def _squarefree_weight(self, q: int, partition: Partition) -> Fraction:
        pi = self.primecount.counter(q)
        count = 1
        for d, m in partition.multiplicities.items():
            count *= math.comb(pi(d), m)
        return Fraction(count, q ** partition.n)

    def _squarefree_types(self, q: int, max_total_degree: int, max_prime_degree: Optional[int] = None,
                          min_total_degree: int = 0, prime_count: Optional[int] = None
                          ) -> Iterator[Tuple[Partition, Fraction]]:
        self._check_degree(max_total_degree)
        for t in range(max(min_total_degree, 0), max_total_degree + 1):
            for parts in self.partitions.iter_parts(t, max_prime_degree):
                if prime_count is not None and len(parts) != prime_count:
                    continue
                partition = Partition(parts)
                weight = self._squarefree_weight(q, partition)
                if weight:
                    yield partition, weight

    def sum_LW_over_squarefree(self, q: int, max_total_degree: int, max_prime_degree: Optional[int] = None,
                               min_total_degree: int = 0, exact_prime_count: Optional[int] = None
                               ) -> Tuple[Fraction, Fraction, Fraction]:
        """
        (Σ L(A)/|A|, Σ W(A)/|A|, Σ τ(A)/|A|) over squarefree A with
        deg A <= max_total_degree and the optional constraints.

        A truncation, hence a lower bound, of the full sums.
        """
        sum_L, sum_W, sum_tau = Fraction(0), Fraction(0), Fraction(0)
        for partition, weight in self._squarefree_types(
                q, max_total_degree, max_prime_degree, min_total_degree, exact_prime_count):
            cluster = self.clustering(partition)
            sum_L += cluster.L * weight
            sum_W += cluster.W * weight
            sum_tau += cluster.tau * weight
        return sum_L, sum_W, sum_tau

    def truncated_S(self, q: int, d: int, max_total_degree: int) -> Fraction:
        """
        Σ L(A) / (|A| (deg P^+(A) + d - deg A)^2) over squarefree A with
        deg P^+(A) <= d and deg A < deg P^+(A) + d; A = 1 contributes 1/d^2.
        """
        if d < 1:
            raise UsageError(f"d must be >= 1, got {d}")
        total = Fraction(0)
        for partition, weight in self._squarefree_types(q, max_total_degree, d):
            top = partition.parts[0] if partition.parts else 0
            gap = top + d - partition.n
            if gap <= 0:
                continue
            total += self.clustering(partition).L * weight / (gap * gap)
        return total

    def truncated_T(self, q: int, d: int, m: int, max_total_degree: int) -> Fraction:
        """T(d,m): Σ L(A)/|A| over squarefree A, deg P^+(A) <= d, deg A >= m."""
        return self.sum_LW_over_squarefree(q, max_total_degree, d, m)[0]

    def truncated_T_k(self, q: int, d: int, m: int, k: int, max_total_degree: int) -> Fraction:
        """T_k(d,m): as T(d,m) restricted to ω(A) = k."""
        if k < 0:
            raise UsageError(f"k must be nonnegative, got {k}")
        return self.sum_LW_over_squarefree(q, max_total_degree, d, m, k)[0]

    def T_k_ratios(self, q: int, d: int, m: int, k: int, max_total_degree: int) -> Dict[str, float]:
        """
        Measured constants for T_k(d,m) under both tempering bases, and
        against e^{-m/d} (2 log d)^k (1 + |v-k|^2) / ((k+1)! (2^{k-v} + 1))
        with v = floor(log2 d).
        """
        if d < 2 or k < 1:
            raise UsageError(f"need d >= 2 and k >= 1, got d={d}, k={k}")
        value = self.truncated_T_k(q, d, m, k, max_total_degree)
        v = d.bit_length() - 1
        with mpmath.workdps(self.config['precision_dps']):
            t = mpmath.mpf(value.numerator) / value.denominator
            shape = (mpmath.exp(-mpmath.mpf(m) / d) * (2 * mpmath.log(d)) ** k * (1 + (v - k) ** 2)
                     / (mpmath.factorial(k + 1) * (mpmath.mpf(2) ** (k - v) + 1)))
            return {
                'T_k': float(t),
                'e_ratio': float(t * mpmath.exp(mpmath.mpf(m) / d) / 2 ** k),
                'q_ratio': float(t * mpmath.power(q, mpmath.mpf(m) / d) / 2 ** k),
                'shape_ratio': float(t / shape)
            }

    def T_ratio(self, q: int, d: int, m: int, max_total_degree: int) -> Dict[str, float]:
        """T(d,m) against e^{-m/d} d^{2-δ} / (log d)^{3/2}."""
        if d < 2:
            raise UsageError(f"d must be >= 2, got {d}")
        value = self.truncated_T(q, d, m, max_total_degree)
        with mpmath.workdps(self.config['precision_dps']):
            t = mpmath.mpf(value.numerator) / value.denominator
            shape = (mpmath.exp(-mpmath.mpf(m) / d) * mpmath.power(d, 2 - self.params.delta)
                     / mpmath.power(mpmath.log(d), 1.5))
            return {'T': float(t), 'shape_ratio': float(t / shape)}

    # ------------------------------------------------------------------
    # Lower-bound family
    # ------------------------------------------------------------------

    @staticmethod
    def family_f(vector: Sequence[int], M: int) -> Fraction:
        """f(b) = Σ_{h=M}^{J} 2^{M-1-h+b_M+...+b_h}, vector indexed from b_1."""
        J = len(vector)
        total, running = Fraction(0), 0
        for h in range(M, J + 1):
            running += vector[h - 1]
            total += Fraction(2) ** (M - 1 - h + running)
        return total

    def build_lower_bound_family(self, q: int, b: int, M: int = 4,
                                 intervals: Optional[DegreeIntervals] = None,
                                 sample_size: int = 5) -> LowerBoundFamily:
        """
        B = {(b_1..b_J): b_j = 0 for j <= M, b_j <= min(Mj, M(J-j+1))} with
        k = floor(log2 b) - 2M and J = M + k - 1, streamed lazily.
        """
        if M < 1:
            raise UsageError(f"M must be >= 1, got {M}")
        if b < 2 ** (2 * M + 1):
            raise UsageError(f"need b >= 2^(2M+1) = {2 ** (2 * M + 1)} so that k >= 1, got b={b}")
        k = b.bit_length() - 1 - 2 * M
        J = M + k - 1
        if intervals is None or intervals.block_count < J:
            intervals = self.primecount.build_degree_intervals(q, J)

        bounds = [0 if j <= M else min(M * j, M * (J - j + 1)) for j in range(1, J + 1)]
        size = math.prod(r + 1 for r in bounds)
        if size > self.config['max_family_size']:
            raise ResourceLimitError(
                f"family has {size} vectors, budget is {self.config['max_family_size']}",
                {'size': size, 'k': k, 'J': J}
            )
        self.logger.info(f"Lower-bound family q={q} b={b} M={M}: k={k}, J={J}, {size} vectors")

        lambdas = intervals.boundaries
        min_f, max_cap, weighted, sample = None, 0, Fraction(0), []
        for vector in itertools.product(*(range(r + 1) for r in bounds)):
            f = self.family_f(vector, M)
            min_f = f if min_f is None or f < min_f else min_f
            max_cap = max(max_cap, sum(bj * lambdas[j] for j, bj in enumerate(vector, start=1)))
            weighted += Fraction(1, math.prod(math.factorial(bj) for bj in vector[M - 1:])) / f
            if len(sample) < sample_size:
                sample.append(tuple(vector))

        return LowerBoundFamily(
            q=q, b=b, M=M, K=intervals.measured_K, k=k, J=J, size=size,
            min_f=min_f, max_cap_degree=max_cap, cap_ok=8 * max_cap <= b,
            weighted_sum=weighted, sample=sample
        )

    def block_family_sums(self, q: int, vector: Sequence[int], intervals: DegreeIntervals,
                          max_total_degree: int) -> Dict[str, object]:
        """
        Truncated Σ W(A)/|A| and Σ τ(A)/|A| over A(b): squarefree A with
        exactly b_j prime factors of degree in block j, deg A <= max_total_degree.

        Measured constants are taken against
        (2 log 2)^{Σb} / ∏ b_j! · Σ_j 2^{-j+b_1+...+b_j} (upper) and
        (2 log 2)^{Σb} / ∏ b_j! (lower).
        """
        self._check_degree(max_total_degree)
        if len(vector) > intervals.block_count:
            raise UsageError(f"vector has {len(vector)} blocks, intervals only {intervals.block_count}")
        pi = self.primecount.counter(q)

        sum_W, sum_tau = Fraction(0), Fraction(0)

        def descend(j: int, budget: int, parts: Tuple[int, ...], weight: Fraction) -> None:
            nonlocal sum_W, sum_tau
            if j > len(vector):
                cluster = self.clustering(parts)
                sum_W += cluster.W * weight
                sum_tau += cluster.tau * weight
                return
            lo, hi = intervals.block(j)
            for choice in _descending_tuples(vector[j - 1], lo + 1, min(hi, budget)):
                spent = sum(choice)
                if spent > budget:
                    continue
                factor = Fraction(1)
                for e, m in Partition.from_parts(choice).multiplicities.items():
                    factor *= Fraction(math.comb(pi(e), m), q ** (e * m))
                if factor:
                    descend(j + 1, budget - spent, parts + choice, weight * factor)

        descend(1, max_total_degree, (), Fraction(1))

        total = sum(vector)
        base = Fraction(1, math.prod(math.factorial(bj) for bj in vector))
        with mpmath.workdps(self.config['precision_dps']):
            lead = (2 * mpmath.log(2)) ** total * mpmath.mpf(base.numerator) / base.denominator
            running, spread = 0, mpmath.mpf(0)
            for j, bj in enumerate(vector, start=1):
                running += bj
                spread += mpmath.mpf(2) ** (running - j)
            upper, lower = lead * spread, lead
            w = mpmath.mpf(sum_W.numerator) / sum_W.denominator
            t = mpmath.mpf(sum_tau.numerator) / sum_tau.denominator
            return {
                'vector': list(vector),
                'W_sum': sum_W,
                'tau_sum': sum_tau,
                'upper_shape': float(upper),
                'lower_shape': float(lower),
                'upper_constant': float(w / upper),
                'lower_constant': float(t / lower)
            }
