"""
Partition Service
=================

Integer partitions and their subset sums: enumeration in decreasing
lexicographic order, exact partition numbers, b-subpartition detection,
cycle-type probabilities, and a weighted partition walker that aggregates
any multiplicative weight by subset-sum profile.

Subset sums are Python-int bitsets: bit d is set iff some sub-multiset of
the parts sums to d.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from app.config import resolve_settings
from app.exceptions import ResourceLimitError, UsageError
from app.models.lab_models import Partition, SubsetSumProfile

# factors[r][d][m]: weight for taking part d with multiplicity m while r
# remains to be partitioned
WeightTable = Sequence[Sequence[Sequence[int]]]


def _walk(remaining: int, max_part: int, mask: int, weight: int,
          factors: WeightTable, out: Dict[int, int]) -> None:
    if remaining == 0:
        out[mask] = out.get(mask, 0) + weight
        return
    for d in range(min(remaining, max_part), 0, -1):
        row = factors[remaining][d]
        m_mask = mask
        for m in range(1, remaining // d + 1):
            m_mask |= m_mask << d
            _walk(remaining - m * d, d - 1, m_mask, weight * row[m], factors, out)


def walk_shard(n: int, first: int, factors: WeightTable) -> Dict[int, int]:
    """
    Aggregate the product of step weights by subset-sum mask over partitions of n
    whose largest part is ``first``.
    """
    out: Dict[int, int] = {}
    if n == 0:
        out[1] = 1
        return out
    row = factors[n][first]
    mask = 1
    for m in range(1, n // first + 1):
        mask |= mask << first
        _walk(n - m * first, first - 1, mask, row[m], factors, out)
    return out


def binary_split(multiplicity: int) -> List[int]:
    """Chunks 1, 2, 4, ..., rest covering every count in [0, multiplicity]."""
    chunks, size = [], 1
    while multiplicity > 0:
        take = min(size, multiplicity)
        chunks.append(take)
        multiplicity -= take
        size <<= 1
    return chunks


def subset_sum_mask(multiplicities: Dict[int, int], limit: Optional[int] = None) -> int:
    """Bitset of reachable sub-multiset sums, using binary splitting per part."""
    mask = 1
    cut = (1 << (limit + 1)) - 1 if limit is not None else None
    for part, mult in multiplicities.items():
        for chunk in binary_split(mult):
            mask |= mask << (chunk * part)
            if cut is not None:
                mask &= cut
    return mask


def mask_to_sums(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class PartitionService:
    """
    Service untuk integer partitions

    Features:
    - Enumeration in decreasing lexicographic order (optionally with a largest-part cap)
    - Exact partition numbers via the pentagonal recurrence
    - Bit-parallel subset sums, labeled subset-sum counts
    - Exact cycle-type probabilities
    - Weighted sweeps aggregated by subset-sum mask, sharded by largest part
    """

    def __init__(self, config=None):
        """Initialize service dengan partition budget"""
        self.logger = logging.getLogger(__name__)
        settings = resolve_settings(config)

        self.default_config = {
            'max_partitions': 2 * 10 ** 8,
            'threads': 1
        }
        self.config = dict(self.default_config)
        self.config.update({
            'max_partitions': settings.get('MAX_PARTITIONS', 2 * 10 ** 8),
            'threads': settings.get('THREADS', 1)
        })

        self._partition_numbers: List[int] = [1]

    # ------------------------------------------------------------------
    # Enumeration and counting
    # ------------------------------------------------------------------

    def enumerate_partitions(self, n: int, max_part: Optional[int] = None) -> Iterator[Partition]:
        """
        Every partition of n exactly once, in decreasing lexicographic order.

        Args:
            n (int): integer to partition, n >= 0
            max_part (int): optional cap on the largest part
        """
        for parts in self.iter_parts(n, max_part):
            yield Partition(parts)

    def iter_parts(self, n: int, max_part: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
        """Raw tuples; the successor rule walks down from the largest partition."""
        if n < 0:
            raise UsageError(f"n must be nonnegative, got {n}")
        k = n if max_part is None else min(max_part, n)
        if n == 0:
            yield ()
            return
        if k < 1:
            return

        q, r = divmod(n, k)
        x = [1] * n
        head = [k] * q + ([r] if r else [])
        x[:len(head)] = head
        m = len(head)
        h = q + (1 if r > 1 else 0) if k > 1 else 0
        yield tuple(x[:m])

        while x[0] != 1:
            if x[h - 1] == 2:
                m += 1
                x[h - 1] = 1
                h -= 1
            else:
                r = x[h - 1] - 1
                t = m - h + 1
                x[h - 1] = r
                while t >= r:
                    h += 1
                    x[h - 1] = r
                    t -= r
                if t == 0:
                    m = h
                else:
                    m = h + 1
                    if t > 1:
                        h += 1
                        x[h - 1] = t
            yield tuple(x[:m])

    def count_partitions(self, n: int) -> int:
        """p(n) by Euler's pentagonal-number recurrence."""
        if n < 0:
            raise UsageError(f"n must be nonnegative, got {n}")
        table = self._partition_numbers
        for size in range(len(table), n + 1):
            total, k = 0, 1
            while True:
                g1 = k * (3 * k - 1) // 2
                if g1 > size:
                    break
                sign = 1 if k % 2 else -1
                total += sign * table[size - g1]
                g2 = k * (3 * k + 1) // 2
                if g2 <= size:
                    total += sign * table[size - g2]
                k += 1
            table.append(total)
        return table[n]

    def check_budget(self, n: int) -> int:
        count = self.count_partitions(n)
        if count > self.config['max_partitions']:
            raise ResourceLimitError(
                f"p({n}) = {count} partitions exceeds the sweep budget {self.config['max_partitions']}",
                {'n': n, 'partitions': count}
            )
        return count

    # ------------------------------------------------------------------
    # Subset sums
    # ------------------------------------------------------------------

    def subset_sum_profile(self, partition: Partition, with_counts: bool = False) -> SubsetSumProfile:
        mask = subset_sum_mask(partition.multiplicities)
        counts = self.subset_sum_counts([(d, 1) for d in partition.parts]) if with_counts else None
        return SubsetSumProfile(n=partition.n, reachable=mask, counts=counts)

    def subset_sum_counts(self, items: Sequence[Tuple[int, int]]) -> List[int]:
        """
        counts[s] = number of labeled choices summing to s, where each item
        (size, bound) may be taken 0..bound times. With bound 1 throughout
        this counts subsets of a labeled multiset; with prime multiplicities
        it counts divisors by degree.
        """
        total = sum(size * bound for size, bound in items)
        counts = [0] * (total + 1)
        counts[0] = 1
        reach = 0
        for size, bound in items:
            new = counts[:]
            for s in range(reach, -1, -1):
                c = counts[s]
                if c:
                    for k in range(1, bound + 1):
                        new[s + k * size] += c
            counts = new
            reach += size * bound
        return counts

    def has_subpartition(self, partition: Partition, b: int) -> bool:
        """True iff some sub-multiset of the parts sums to b."""
        if not 0 <= b <= partition.n:
            raise UsageError(f"b must lie in [0, {partition.n}], got {b}")
        return bool((subset_sum_mask(partition.multiplicities, limit=b) >> b) & 1)

    def lambda_iter(self, n: int, b: int) -> Iterator[Partition]:
        """Λ(n, b): partitions of n with a b-subpartition."""
        if not 0 <= b <= n:
            raise UsageError(f"b must lie in [0, {n}], got {b}")
        for parts in self.iter_parts(n):
            partition = Partition(parts)
            if self.has_subpartition(partition, b):
                yield partition

    # ------------------------------------------------------------------
    # Cycle types
    # ------------------------------------------------------------------

    def cycle_denominator(self, partition: Partition) -> int:
        """∏_d d^{m_d} m_d!"""
        denom = 1
        for d, m in partition.multiplicities.items():
            denom *= d ** m * math.factorial(m)
        return denom

    def cycle_type_probability(self, partition: Partition) -> Fraction:
        """P(λ) = ∏_d 1/(d^{m_d} m_d!)"""
        return Fraction(1, self.cycle_denominator(partition))

    def conjugacy_class_size(self, partition: Partition) -> int:
        return math.factorial(partition.n) // self.cycle_denominator(partition)

    # ------------------------------------------------------------------
    # Weighted sweeps
    # ------------------------------------------------------------------

    def weighted_profile(self, n: int, factors: WeightTable, threads: Optional[int] = None) -> Dict[int, int]:
        """
        Σ over partitions λ of n of the product of step weights, keyed by the
        subset-sum bitset of λ.

        Shards by largest part; partial dicts merge in shard order so the
        result does not depend on the worker count.
        """
        self.check_budget(n)
        workers = threads or self.config['threads']
        if n == 0:
            return {1: 1}

        shards = list(range(n, 0, -1))
        self.logger.info(f"Partition sweep n={n} over {len(shards)} shards, {workers} worker(s)")
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                partials = list(pool.map(walk_shard, [n] * len(shards), shards, [factors] * len(shards)))
        else:
            partials = [walk_shard(n, first, factors) for first in shards]

        merged: Dict[int, int] = {}
        for partial in partials:
            for mask, weight in partial.items():
                merged[mask] = merged.get(mask, 0) + weight
        self.logger.debug(f"Partition sweep n={n}: {len(merged)} distinct subset-sum profiles")
        return merged

    @staticmethod
    def profile_by_b(n: int, profile: Dict[int, int]) -> List[int]:
        """totals[b] = Σ weight over masks with bit b set, 0 <= b <= n"""
        totals = [0] * (n + 1)
        for mask, weight in profile.items():
            for b in mask_to_sums(mask):
                totals[b] += weight
        return totals

    @staticmethod
    def uniform_weights(n: int, rows: Sequence[Sequence[int]]) -> List[Sequence[Sequence[int]]]:
        """Step weights that ignore the remaining size."""
        return [rows] * (n + 1)

    @staticmethod
    def class_size_weights(n: int) -> List[List[List[int]]]:
        """
        factors[r][d][m] = r! / (d^m m! (r - md)!), the ways to carve m
        d-cycles out of r points; the product along a partition is its
        conjugacy-class size n! P(λ).
        """
        table: List[List[List[int]]] = []
        for r in range(n + 1):
            rows: List[List[int]] = [[1]]
            for d in range(1, r + 1):
                row = [1]
                for m in range(1, r // d + 1):
                    row.append(math.factorial(r) // (d ** m * math.factorial(m) * math.factorial(r - m * d)))
                rows.append(row)
            table.append(rows)
        return table
