"""
Laboratory Models
=================

Data models for polynomials, factorizations, partitions and the reports the
laboratory produces. Every model serializes with ``to_dict`` and most can be
restored with ``from_dict``.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Tuple

import mpmath

from app.exceptions import UsageError


def ratio_to_str(value: Fraction) -> str:
    """Exact rational as 'num/den' (or 'num' when integral)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def ratio_from_str(text: str) -> Fraction:
    return Fraction(text)


@dataclass(frozen=True)
class MonicPoly:
    """Monic polynomial over F_p; coefficients lowest degree first, leading 1 implicit"""
    p: int
    coeffs: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.p < 2:
            raise UsageError(f"modulus must be >= 2, got {self.p}")
        object.__setattr__(self, 'coeffs', tuple(int(c) for c in self.coeffs))
        for c in self.coeffs:
            if not 0 <= c < self.p:
                raise UsageError(f"coefficient {c} outside [0, {self.p})")

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def rank(self) -> int:
        """Base-p encoding of the non-leading coefficients."""
        k = 0
        for c in reversed(self.coeffs):
            k = k * self.p + c
        return k

    @property
    def full_coeffs(self) -> Tuple[int, ...]:
        return self.coeffs + (1,)

    @classmethod
    def one(cls, p: int) -> 'MonicPoly':
        return cls(p, ())

    @classmethod
    def x(cls, p: int) -> 'MonicPoly':
        return cls(p, (0,))

    def to_dict(self) -> Dict[str, int]:
        """Stable (p, n, k) encoding"""
        return {'p': self.p, 'n': self.degree, 'k': self.rank}

    @classmethod
    def from_dict(cls, data: Dict[str, int]) -> 'MonicPoly':
        p, n, k = int(data['p']), int(data['n']), int(data['k'])
        if not 0 <= k < p ** n:
            raise UsageError(f"rank {k} outside [0, {p}^{n})")
        digits = []
        for _ in range(n):
            k, c = divmod(k, p)
            digits.append(c)
        return cls(p, tuple(digits))

    def __str__(self) -> str:
        terms = []
        for power in range(self.degree, -1, -1):
            c = self.full_coeffs[power]
            if c == 0:
                continue
            if power == 0:
                terms.append(str(c))
                continue
            mono = 'x' if power == 1 else f"x^{power}"
            terms.append(mono if c == 1 else f"{c}{mono}")
        return ' + '.join(terms) if terms else '0'


def degree_offset(p: int, n: int) -> int:
    """Number of monic polynomials of degree < n over F_p: Σ_{m<n} p^m."""
    return (p ** n - 1) // (p - 1)


@dataclass(eq=False)
class SpfTable:
    """
    Smallest-prime-divisor table for every monic polynomial of degree <= N.

    Entries are addressed by a global index offset(n) + rank. ``spf`` holds
    the global index of the minimal-degree (then minimal-rank) prime divisor,
    -1 for the unit; ``cofactor`` holds the index of F / spf(F), 0 (the unit)
    for primes.
    """
    p: int
    max_degree: int
    spf: Any
    cofactor: Any
    offsets: List[int]

    @property
    def size(self) -> int:
        return self.offsets[-1]

    def index_of(self, poly: MonicPoly) -> int:
        if poly.degree > self.max_degree:
            raise UsageError(f"degree {poly.degree} exceeds table degree {self.max_degree}")
        if poly.p != self.p:
            raise UsageError(f"modulus {poly.p} does not match table modulus {self.p}")
        return self.offsets[poly.degree] + poly.rank

    def degree_of(self, index: int) -> int:
        lo, hi = 0, self.max_degree
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.offsets[mid] <= index:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def poly_at(self, index: int) -> MonicPoly:
        n = self.degree_of(index)
        return MonicPoly.from_dict({'p': self.p, 'n': n, 'k': index - self.offsets[n]})

    def degree_slice(self, n: int) -> slice:
        return slice(self.offsets[n], self.offsets[n + 1])

    def is_prime_index(self, index: int) -> bool:
        return index > 0 and int(self.spf[index]) == index

    def prime_indices(self, degree: int) -> List[int]:
        block = self.degree_slice(degree)
        own = self.spf[block]
        return [block.start + i for i, value in enumerate(own.tolist()) if value == block.start + i]

    def to_dict(self) -> Dict[str, Any]:
        return {'p': self.p, 'max_degree': self.max_degree, 'entries': self.size}


@dataclass(frozen=True)
class Factorization:
    """
    Multiset of prime factors as (prime index, multiplicity) pairs, with the
    degree of each prime alongside. Prime indices are global SpfTable indices
    for real polynomials and synthetic labels for degree-only factorizations.
    """
    factors: Tuple[Tuple[int, int], ...]
    prime_degrees: Tuple[int, ...]
    p: Optional[int] = None

    def __post_init__(self):
        if len(self.factors) != len(self.prime_degrees):
            raise UsageError("factors and prime_degrees must align")
        for (_, mult), deg in zip(self.factors, self.prime_degrees):
            if mult < 1 or deg < 1:
                raise UsageError("multiplicities and prime degrees must be positive")

    @classmethod
    def from_degrees(cls, pairs: Iterable[Tuple[int, int]]) -> 'Factorization':
        """Build a degree-only factorization from (degree, multiplicity) pairs; each pair is a distinct prime."""
        pairs = [(int(d), int(m)) for d, m in pairs]
        factors = tuple((index, m) for index, (_, m) in enumerate(pairs))
        return cls(factors=factors, prime_degrees=tuple(d for d, _ in pairs))

    @property
    def degree(self) -> int:
        return sum(d * m for (_, m), d in zip(self.factors, self.prime_degrees))

    @property
    def degree_multiplicities(self) -> List[Tuple[int, int]]:
        """(prime degree, multiplicity) per distinct prime"""
        return [(d, m) for (_, m), d in zip(self.factors, self.prime_degrees)]

    @property
    def degrees(self) -> Tuple[int, ...]:
        """λ_F: prime degrees with multiplicity, weakly decreasing."""
        out = []
        for d, m in self.degree_multiplicities:
            out.extend([d] * m)
        return tuple(sorted(out, reverse=True))

    @property
    def omega(self) -> int:
        return sum(m for _, m in self.factors)

    @property
    def omega_distinct(self) -> int:
        return len(self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(m == 1 for _, m in self.factors)

    @property
    def is_squarefull(self) -> bool:
        return all(m >= 2 for _, m in self.factors)

    @property
    def mobius(self) -> int:
        if not self.is_squarefree:
            return 0
        return -1 if len(self.factors) % 2 else 1

    @property
    def largest_prime_degree(self) -> int:
        """deg P^+(A); 0 for A = 1"""
        return max(self.prime_degrees, default=0)

    @property
    def smallest_prime_degree(self) -> float:
        """deg P^-(A); +inf for A = 1"""
        return min(self.prime_degrees, default=math.inf)

    def split_squarefull(self) -> Tuple['Factorization', 'Factorization']:
        """F = F' F'' with F' squarefree, F'' squarefull and the two coprime."""
        free, full = [], []
        for pair, deg in zip(self.factors, self.prime_degrees):
            (free if pair[1] == 1 else full).append((pair, deg))
        build = lambda rows: Factorization(tuple(r[0] for r in rows), tuple(r[1] for r in rows), self.p)
        return build(free), build(full)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p': self.p,
            'degree': self.degree,
            'factors': [
                {'prime': index, 'degree': deg, 'multiplicity': m}
                for (index, m), deg in zip(self.factors, self.prime_degrees)
            ],
            'type': Partition(self.degrees).to_string()
        }


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing positive parts"""
    parts: Tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        object.__setattr__(self, 'parts', parts)
        if any(x < 1 for x in parts):
            raise UsageError(f"partition parts must be positive: {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise UsageError(f"partition parts must be weakly decreasing: {parts}")

    @classmethod
    def from_parts(cls, parts: Iterable[int]) -> 'Partition':
        return cls(tuple(sorted(parts, reverse=True)))

    @classmethod
    def from_string(cls, text: str) -> 'Partition':
        text = text.strip()
        if not text:
            return cls(())
        return cls.from_parts(int(x) for x in text.split(','))

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def multiplicities(self) -> Dict[int, int]:
        """m_d for each distinct part d, largest part first"""
        return dict(sorted(Counter(self.parts).items(), reverse=True))

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def to_string(self) -> str:
        return ','.join(str(x) for x in self.parts)

    def __str__(self) -> str:
        return self.to_string()

    def to_dict(self) -> Dict[str, Any]:
        return {'n': self.n, 'parts': list(self.parts)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Partition':
        return cls(tuple(data['parts']))


@dataclass
class SubsetSumProfile:
    """Subset sums of a partition: reachable bitset, optional per-sum counts"""
    n: int
    reachable: int
    counts: Optional[List[int]] = None

    def is_reachable(self, d: int) -> bool:
        return 0 <= d <= self.n and bool((self.reachable >> d) & 1)

    @property
    def reachable_sums(self) -> List[int]:
        return [d for d in range(self.n + 1) if (self.reachable >> d) & 1]

    def to_dict(self) -> Dict[str, Any]:
        data = {'n': self.n, 'reachable': self.reachable_sums}
        if self.counts is not None:
            data['counts'] = [str(c) for c in self.counts]
        return data


@dataclass
class PrimeCountSeq:
    """π_q(d) for 1 <= d <= max_degree (index 0 unused)"""
    q: int
    counts: List[int]

    @property
    def max_degree(self) -> int:
        return len(self.counts) - 1

    def __getitem__(self, d: int) -> int:
        return self.counts[d]

    def gauss_holds(self) -> bool:
        """Σ_{e|d} e·π_q(e) = q^d for every tabulated d"""
        for d in range(1, self.max_degree + 1):
            total = sum(e * self.counts[e] for e in range(1, d + 1) if d % e == 0)
            if total != self.q ** d:
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {'q': self.q, 'counts': [str(c) for c in self.counts[1:]]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PrimeCountSeq':
        return cls(q=int(data['q']), counts=[0] + [int(c) for c in data['counts']])


@dataclass
class DegreeIntervals:
    """
    Prime-degree blocks D_j = (λ_{j-1}, λ_j]. ``masses`` holds the exact
    rational mass when the block lies within the exact-degree limit and None
    otherwise; ``mass_bounds`` always holds certified (low, high) floats.
    """
    q: int
    boundaries: List[int]
    masses: List[Optional[Fraction]]
    mass_bounds: List[Tuple[float, float]]
    overflow: List[bool]

    @property
    def block_count(self) -> int:
        return len(self.boundaries) - 1

    def block(self, j: int) -> Tuple[int, int]:
        """(λ_{j-1}, λ_j] as a half-open pair, j >= 1"""
        return self.boundaries[j - 1], self.boundaries[j]

    def block_of_degree(self, e: int) -> Optional[int]:
        for j in range(1, len(self.boundaries)):
            if self.boundaries[j - 1] < e <= self.boundaries[j]:
                return j
        return None

    @property
    def measured_K(self) -> float:
        """Smallest K with 2^{j-K} <= λ_j <= 2^{j+K} over the built blocks."""
        if self.block_count == 0:
            return 0.0
        return max(abs(math.log2(self.boundaries[j]) - j) for j in range(1, len(self.boundaries)))

    def to_dict(self) -> Dict[str, Any]:
        blocks = []
        for j in range(1, len(self.boundaries)):
            mass = self.masses[j - 1]
            low, high = self.mass_bounds[j - 1]
            blocks.append({
                'j': j,
                'lambda': self.boundaries[j],
                'degrees': [self.boundaries[j - 1] + 1, self.boundaries[j]],
                'mass': ratio_to_str(mass) if mass is not None else None,
                'mass_low': low,
                'mass_high': high,
                'overflow': self.overflow[j - 1]
            })
        return {'q': self.q, 'K': self.measured_K, 'blocks': blocks}


class AsymptoticParams:
    """δ = 1 - (1 + log log 2)/log 2 and the (log b)^{3/2} exponent, at working precision."""

    EXPONENT = Fraction(3, 2)

    def __init__(self, dps: int = 50):
        self.dps = dps
        with mpmath.workdps(dps):
            log2 = mpmath.log(2)
            self.delta = 1 - (1 + mpmath.log(log2)) / log2

    @property
    def delta_text(self) -> str:
        """δ truncated to six places, as printed in report headers"""
        with mpmath.workdps(self.dps):
            return f"{mpmath.floor(self.delta * 10 ** 6) / 10 ** 6:.6f}"

    def predicted(self, total: int, b: int) -> Optional[mpmath.mpf]:
        """total · b^{-δ} (log b)^{-3/2}; None when b < 2"""
        if b < 2:
            return None
        with mpmath.workdps(self.dps):
            return mpmath.mpf(total) / (mpmath.power(b, self.delta) * mpmath.power(mpmath.log(b), 1.5))

    def to_dict(self) -> Dict[str, str]:
        return {'delta': self.delta_text, 'exponent': '3/2'}


@dataclass
class CountReport:
    """One exact count with its density and the asymptotic prediction"""
    kind: str
    n: int
    b: int
    count: int
    total: int
    q: Optional[int] = None
    params: AsymptoticParams = field(default_factory=AsymptoticParams, repr=False, compare=False)

    @property
    def density(self) -> Fraction:
        return Fraction(self.count, self.total)

    @property
    def predicted(self) -> Optional[mpmath.mpf]:
        return self.params.predicted(self.total, self.b)

    @property
    def ratio(self) -> Optional[mpmath.mpf]:
        predicted = self.predicted
        if predicted is None:
            return None
        with mpmath.workdps(self.params.dps):
            return mpmath.mpf(self.count) / predicted

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'q': self.q,
            'n': self.n,
            'b': self.b,
            'count': str(self.count),
            'density': self.density,
            'predicted': self.predicted,
            'ratio': self.ratio
        }


@dataclass
class DivisorClustering:
    """Ll(A) as a bitset over [0, deg A], τ_d and derived L, τ, W"""
    degree: int
    Ll: int
    tau_d: List[int]

    @property
    def L(self) -> int:
        return bin(self.Ll).count('1')

    @property
    def tau(self) -> int:
        return sum(self.tau_d)

    @property
    def W(self) -> int:
        return sum(t * t for t in self.tau_d)

    @property
    def degrees(self) -> List[int]:
        return [d for d in range(self.degree + 1) if (self.Ll >> d) & 1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'degree': self.degree,
            'Ll': self.degrees,
            'L': self.L,
            'tau': str(self.tau),
            'tau_d': [str(t) for t in self.tau_d],
            'W': str(self.W)
        }


@dataclass
class LowerBoundFamily:
    """The block-count family B with f(b) and its weighted sum"""
    q: int
    b: int
    M: int
    K: float
    k: int
    J: int
    size: int
    min_f: Fraction
    max_cap_degree: int
    cap_ok: bool
    weighted_sum: Fraction
    sample: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def cap(self) -> Fraction:
        return Fraction(self.b, 8)

    @property
    def tree_ratio(self) -> float:
        """weighted_sum / (k^{k-1}/k!)"""
        return float(self.weighted_sum / Fraction(self.k ** (self.k - 1), math.factorial(self.k)))

    @property
    def shape_ratio(self) -> float:
        """weighted_sum · k^{3/2}"""
        return float(self.weighted_sum) * self.k ** 1.5

    def to_dict(self) -> Dict[str, Any]:
        return {
            'q': self.q,
            'b': self.b,
            'M': self.M,
            'K': self.K,
            'k': self.k,
            'J': self.J,
            'size': self.size,
            'min_f': ratio_to_str(self.min_f),
            'max_cap_degree': self.max_cap_degree,
            'cap': ratio_to_str(self.cap),
            'cap_ok': self.cap_ok,
            'weighted_sum': ratio_to_str(self.weighted_sum),
            'tree_ratio': self.tree_ratio,
            'shape_ratio': self.shape_ratio,
            'sample': [list(v) for v in self.sample]
        }


@dataclass
class SampleEstimate:
    """Monte-Carlo density estimate with a 95% Wilson interval"""
    kind: str
    n: int
    b: int
    trials: int
    hits: int
    seed: int
    ci_low: float
    ci_high: float
    q: Optional[int] = None

    @property
    def estimate(self) -> float:
        return self.hits / self.trials if self.trials else 0.0

    @property
    def standard_error(self) -> float:
        if not self.trials:
            return 0.0
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'q': self.q,
            'n': self.n,
            'b': self.b,
            'count': str(self.hits),
            'density': self.estimate,
            'trials': self.trials,
            'seed': self.seed,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high
        }


@dataclass
class RunConfig:
    """Validated command-line request"""
    subcommand: str
    kind: Optional[str] = None
    q: Optional[int] = None
    n_values: List[int] = field(default_factory=list)
    b_values: Optional[List[int]] = None
    trials: int = 0
    seed: int = 7
    threads: int = 1
    fmt: str = 'csv'
    output: Optional[str] = None
    scope: str = 'all'
    intervals: int = 0
    family: bool = False
    M: int = 4
    gnuplot: bool = False
    model: str = 'asymptotic'
    budgets: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand,
            'kind': self.kind,
            'q': self.q,
            'n': list(self.n_values),
            'b': list(self.b_values) if self.b_values is not None else None,
            'trials': self.trials,
            'seed': self.seed,
            'threads': self.threads,
            'format': self.fmt,
            'output': self.output,
            'scope': self.scope,
            'budgets': dict(self.budgets)
        }
