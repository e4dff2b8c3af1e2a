"""
Sampler Service
===============

Monte-Carlo estimates of |T(n,b)|/n! and |H(n,b)|/p^n beyond exact reach.

Trials are grouped in fixed-size blocks; block i draws from its own Philox
stream seeded by SeedSequence(seed, spawn_key=(i,)), so the hit count does
not depend on how blocks are spread over workers.
"""

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from app.config import resolve_settings
from app.exceptions import UsageError
from app.models.lab_models import Partition, SampleEstimate
from app.services.gfpoly_service import GFPolyService
from app.services.partition_service import subset_sum_mask

WILSON_Z = 1.959963984540054


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based substream for one block of trials."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def feller_cycle_lengths(n: int, rng: np.random.Generator) -> List[int]:
    """
    Cycle lengths of a uniform permutation of n points: the cycle through
    the smallest unplaced point has length uniform on 1..remaining.
    """
    lengths = []
    remaining = n
    while remaining:
        length = int(rng.integers(1, remaining + 1))
        lengths.append(length)
        remaining -= length
    return lengths


def _t_block_hits(n: int, b: int, seed: int, block: int, count: int) -> int:
    rng = block_generator(seed, block)
    hits = 0
    for _ in range(count):
        mask = subset_sum_mask(Counter(feller_cycle_lengths(n, rng)), limit=b)
        hits += (mask >> b) & 1
    return hits


def wilson_interval(hits: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = hits / trials
    z2 = z * z
    centre = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


class SamplerService:
    """
    Service untuk Monte-Carlo density estimates

    Features:
    - Exact-law sampling of cycle types (Feller coupling)
    - T and H density estimates with Wilson intervals
    - Deterministic across worker counts
    """

    def __init__(self, config=None, gfpoly: Optional[GFPolyService] = None):
        """Initialize service dengan block size dan worker count"""
        self.logger = logging.getLogger(__name__)
        settings = resolve_settings(config)

        self.default_config = {
            'block_size': 4096,
            'threads': 1
        }
        self.config = dict(self.default_config)
        self.config.update({
            'block_size': settings.get('SAMPLER_BLOCK_SIZE', 4096),
            'threads': settings.get('THREADS', 1)
        })

        self.gfpoly = gfpoly or GFPolyService(config)

    def _blocks(self, trials: int) -> List[Tuple[int, int]]:
        size = self.config['block_size']
        return [(i, min(size, trials - i * size)) for i in range((trials + size - 1) // size)]

    @staticmethod
    def _check(n: int, b: int, trials: int) -> None:
        if n < 1:
            raise UsageError(f"n must be >= 1, got {n}")
        if not 0 <= b <= n:
            raise UsageError(f"b must lie in [0, {n}], got {b}")
        if trials < 1:
            raise UsageError(f"trials must be >= 1, got {trials}")

    def sample_cycle_type(self, n: int, rng: np.random.Generator) -> Partition:
        """λ_σ for a uniform σ in S_n."""
        if n < 1:
            raise UsageError(f"n must be >= 1, got {n}")
        return Partition.from_parts(feller_cycle_lengths(n, rng))

    def estimate_T_density(self, n: int, b: int, trials: int, seed: int,
                           threads: Optional[int] = None) -> SampleEstimate:
        """Fraction of sampled cycle types with a b-subpartition."""
        self._check(n, b, trials)
        target = min(b, n - b)
        if target == 0:
            hits = trials
        else:
            blocks = self._blocks(trials)
            workers = threads or self.config['threads']
            self.logger.info(f"Sampling T(n={n}, b={target}): {trials} trials in {len(blocks)} blocks, {workers} worker(s)")
            args = ([n] * len(blocks), [target] * len(blocks), [seed] * len(blocks),
                    [i for i, _ in blocks], [c for _, c in blocks])
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    hits = sum(pool.map(_t_block_hits, *args))
            else:
                hits = sum(map(_t_block_hits, *args))
        low, high = wilson_interval(hits, trials)
        return SampleEstimate(kind='T', n=n, b=b, trials=trials, hits=hits, seed=seed, ci_low=low, ci_high=high)

    def estimate_H_density(self, p: int, n: int, b: int, trials: int, seed: int) -> SampleEstimate:
        """
        Fraction of uniform monic F of degree n with a divisor of degree b.

        Selalu berjalan dalam satu process: each block is one vectorised
        lookup into the subset-mask array of the shared SpfTable, so there
        is no ``threads`` argument. Block streams are the same as for T, so
        the estimate still depends only on (seed, trials, block size).
        """
        self._check(n, b, trials)
        target = min(b, n - b)
        if target == 0:
            hits = trials
        else:
            table = self.gfpoly.build_spf(p, n)
            masks = self.gfpoly.subset_masks(table, n)
            start = table.offsets[n]
            bit = np.uint64(target)
            hits = 0
            self.logger.info(f"Sampling H(p={p}, n={n}, b={target}): {trials} trials")
            for block, count in self._blocks(trials):
                rng = block_generator(seed, block)
                ranks = rng.integers(0, p ** n, size=count, dtype=np.int64)
                hits += int(np.count_nonzero((masks[start + ranks] >> bit) & np.uint64(1)))
        low, high = wilson_interval(hits, trials)
        return SampleEstimate(kind='H', n=n, b=b, trials=trials, hits=hits, seed=seed,
                              ci_low=low, ci_high=high, q=p)
