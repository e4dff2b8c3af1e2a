"""
Prime Count Service
===================

Exact counts of prime (monic irreducible) polynomials over F_q for any prime
power q, and the aggregates built from them: counts by factorization type,
inverse-prime sums, tempered sums, and the prime-degree blocks of mass
about log 2.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional

import mpmath
from mpmath import iv
from sympy import divisors, factorint, mobius

from app.config import resolve_settings
from app.exceptions import UsageError
from app.models.lab_models import DegreeIntervals, Partition, PrimeCountSeq


def multichoose(n: int, k: int) -> int:
    """Number of size-k multisets drawn from n labels."""
    if k == 0:
        return 1
    if n <= 0:
        return 0
    return math.comb(n + k - 1, k)


def is_prime_power(q: int) -> bool:
    return q >= 2 and len(factorint(q)) == 1


class PrimeCounter:
    """
    Cached prime-count sequence π_q(1..d) for a single q.
    """

    def __init__(self, q: int):
        if not is_prime_power(q):
            raise UsageError(f"q must be a prime power >= 2, got {q}")
        self.q = q
        self._counts: List[int] = [0]

    def __call__(self, d: int) -> int:
        if d < 1:
            raise UsageError(f"degree must be >= 1, got {d}")
        while len(self._counts) <= d:
            self._counts.append(self._gauss(len(self._counts)))
        return self._counts[d]

    def _gauss(self, d: int) -> int:
        total = sum(int(mobius(e)) * self.q ** (d // e) for e in divisors(d))
        return total // d

    def sequence(self, max_degree: int) -> PrimeCountSeq:
        if max_degree >= 1:
            self(max_degree)
        return PrimeCountSeq(q=self.q, counts=list(self._counts[:max_degree + 1]))


class PrimeCountService:
    """
    Service untuk prime polynomial counts

    Features:
    - π_q(d) by the Möbius / Gauss formula
    - π_q(n, λ) as a product of multiset coefficients
    - Exact inverse-prime sums, tempered sums
    - Degree blocks D_j with certified mass comparisons against log 2
    """

    def __init__(self, config=None):
        """Initialize service dengan precision settings"""
        self.logger = logging.getLogger(__name__)
        settings = resolve_settings(config)

        self.default_config = {
            'exact_degree_limit': 64,
            'precision_dps': 50,
            'max_interval_prec': 4096
        }
        self.config = dict(self.default_config)
        self.config.update({
            'exact_degree_limit': settings.get('EXACT_DEGREE_LIMIT', 64),
            'precision_dps': settings.get('PRECISION_DPS', 50)
        })

        self._counters: Dict[int, PrimeCounter] = {}

    def counter(self, q: int) -> PrimeCounter:
        if q not in self._counters:
            self._counters[q] = PrimeCounter(q)
        return self._counters[q]

    # ------------------------------------------------------------------
    # Counts
    # ------------------------------------------------------------------

    def prime_poly_count(self, q: int, d: int) -> int:
        """π_q(d) = (1/d) Σ_{e|d} μ(e) q^{d/e}"""
        if d == 0:
            raise UsageError("prime_poly_count is undefined for d = 0")
        return self.counter(q)(d)

    def prime_count_sequence(self, q: int, max_degree: int) -> PrimeCountSeq:
        return self.counter(q).sequence(max_degree)

    def count_with_type(self, q: int, partition: Partition) -> int:
        """π_q(n, λ) = ∏_d multichoose(π_q(d), m_d)"""
        pi = self.counter(q)
        total = 1
        for d, m in partition.multiplicities.items():
            total *= multichoose(pi(d), m)
        return total

    def type_weight_table(self, q: int, n: int, squarefree: bool = False) -> List[List[int]]:
        """
        rows[d][m] = multichoose(π_q(d), m) (or C(π_q(d), m) when
        squarefree) for 1 <= d <= n, 0 <= m <= n // d.
        """
        pi = self.counter(q)
        rows: List[List[int]] = [[1]]
        for d in range(1, n + 1):
            count = pi(d)
            if squarefree:
                rows.append([math.comb(count, m) for m in range(n // d + 1)])
            else:
                rows.append([multichoose(count, m) for m in range(n // d + 1)])
        return rows

    # ------------------------------------------------------------------
    # Inverse-prime sums
    # ------------------------------------------------------------------

    def degree_mass(self, q: int, e: int) -> Fraction:
        """Σ_{deg P = e} 1/|P| = π_q(e) / q^e"""
        return Fraction(self.counter(q)(e), q ** e)

    def inverse_prime_sum(self, q: int, d1: int, d2: int) -> Fraction:
        """Σ_{d1 <= deg P <= d2} 1/|P|, exact."""
        if not 1 <= d1 <= d2:
            raise UsageError(f"need 1 <= d1 <= d2, got d1={d1}, d2={d2}")
        return sum((self.degree_mass(q, e) for e in range(d1, d2 + 1)), Fraction(0))

    def tempered_prime_sum(self, q: int, d: int) -> float:
        """
        Σ_{deg P <= d} |P|^{-(1 - 1/(d log q))}, aggregated per degree:
        Σ_e π_q(e) q^{-e} e^{e/d}.
        """
        if d < 1:
            raise UsageError(f"d must be >= 1, got {d}")
        pi = self.counter(q)
        with mpmath.workdps(self.config['precision_dps']):
            total = mpmath.mpf(0)
            for e in range(1, d + 1):
                total += mpmath.mpf(pi(e)) / mpmath.power(q, e) * mpmath.exp(mpmath.mpf(e) / d)
            return float(total)

    def tempered_prime_sum_direct(self, q: int, d: int, exponent: Optional[float] = None) -> float:
        """
        Σ_{deg P <= d} |P|^{-s} summed prime by prime (one term per polynomial).
        With the default exponent s = 1 - 1/(d log q) this is the oracle for
        ``tempered_prime_sum``.
        """
        pi = self.counter(q)
        with mpmath.workdps(self.config['precision_dps']):
            s = 1 - 1 / (d * mpmath.log(q)) if exponent is None else mpmath.mpf(exponent)
            total = mpmath.mpf(0)
            for e in range(1, d + 1):
                term = mpmath.power(q, -e * s)
                for _ in range(pi(e)):
                    total += term
            return float(total)

    # ------------------------------------------------------------------
    # Degree intervals
    # ------------------------------------------------------------------

    def _exact_prefix(self, q: int, limit: int) -> List[Fraction]:
        prefix = [Fraction(0)]
        for e in range(1, limit + 1):
            prefix.append(prefix[-1] + self.degree_mass(q, e))
        return prefix

    def _interval_mass(self, q: int, a: int, b: int, prefix: List[Fraction]):
        """
        Certified interval for Σ_{a < e <= b} π_q(e)/q^e.

        Degrees up to the exact limit are summed exactly; beyond it the
        harmonic part uses H_n = log n + γ + 1/(2n) - 1/(12n^2) + ε_n with
        0 < ε_n < 1/(120 n^4), and |π_q(e)/q^e - 1/e| <= 2 q^{-e/2}/e.
        """
        limit = len(prefix) - 1
        total = iv.mpf(0)
        top = min(b, limit)
        if top > a:
            exact = prefix[top] - prefix[a]
            total += iv.mpf(exact.numerator) / iv.mpf(exact.denominator)
        lo = max(a, limit)
        if b > lo:
            A, B = iv.mpf(lo), iv.mpf(b)
            harmonic = (iv.ln(B) - iv.ln(A) + 1 / (2 * B) - 1 / (2 * A)
                        - 1 / (12 * B ** 2) + 1 / (12 * A ** 2))
            eps = 1 / (120 * A ** 4)
            root = iv.sqrt(iv.mpf(q))
            tail = 2 / ((lo + 1) * root ** (lo + 1) * (1 - 1 / root))
            total += harmonic + iv.mpf([-1, 1]) * (eps + tail)
        return total

    def _mass_within_log2(self, q: int, a: int, b: int, prefix: List[Fraction]) -> bool:
        """Sound 'mass(a, b] <= log 2'; undecidable cases count as exceeding."""
        saved = iv.prec
        try:
            prec = 64
            while prec <= self.config['max_interval_prec']:
                iv.prec = prec
                verdict = self._interval_mass(q, a, b, prefix) <= iv.ln2
                if verdict is not None:
                    return bool(verdict)
                prec *= 2
            self.logger.warning(f"mass comparison undecided for q={q} block ({a}, {b}]")
            return False
        finally:
            iv.prec = saved

    def build_degree_intervals(self, q: int, j_max: int) -> DegreeIntervals:
        """
        Greedy blocks: λ_j is the largest boundary with block mass <= log 2,
        except that every block holds at least one degree (overflow flagged).
        """
        if j_max < 1:
            raise UsageError(f"j_max must be >= 1, got {j_max}")
        self.counter(q)
        limit = self.config['exact_degree_limit']
        prefix = self._exact_prefix(q, limit)

        boundaries, masses, bounds, overflow = [0], [], [], []
        for j in range(1, j_max + 1):
            a = boundaries[-1]
            if not self._mass_within_log2(q, a, a + 1, prefix):
                b, flagged = a + 1, True
            else:
                good, step = a + 1, 1
                while self._mass_within_log2(q, a, good + step, prefix):
                    good += step
                    step *= 2
                bad = good + step
                while bad - good > 1:
                    mid = (good + bad) // 2
                    if self._mass_within_log2(q, a, mid, prefix):
                        good = mid
                    else:
                        bad = mid
                b, flagged = good, False

            saved = iv.prec
            try:
                iv.prec = 128
                enclosure = self._interval_mass(q, a, b, prefix)
                low, high = float(enclosure.a), float(enclosure.b)
            finally:
                iv.prec = saved
            boundaries.append(b)
            masses.append(prefix[b] - prefix[a] if b <= limit else None)
            bounds.append((low, high))
            overflow.append(flagged)
            self.logger.debug(f"q={q} block {j}: ({a}, {b}] overflow={flagged}")

        return DegreeIntervals(q=q, boundaries=boundaries, masses=masses, mass_bounds=bounds, overflow=overflow)
