"""
Verify Controller
=================

Controller untuk verification suites: oracle equivalences, exact
identities and measured-constant checks, grouped by module and run by
scope. Each check reports pass/fail with details; the summary is JSON.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from app.exceptions import LabError
from app.models.lab_models import Factorization
from app.services.census_service import CensusService
from app.services.divstats_service import DivStatsService
from app.services.gfpoly_service import GFPolyService
from app.services.partition_service import PartitionService, subset_sum_mask
from app.services.primecount_service import PrimeCountService
from app.services.sampler_service import SamplerService
from app.controllers.lab_controller import build_settings
from app.utils.report_formatter import ReportFormatter

CheckResult = Tuple[bool, Dict[str, Any]]

# (p, largest n) for oracle comparisons against full F_p[x] scans
BRUTE_H_GRID = ((2, 16), (3, 12), (5, 8))
BRUTE_TYPE_GRID = ((2, 12), (3, 12), (5, 8))
BRUTE_APPENDIX_GRID = ((2, 12), (3, 12))
WORKER_COUNTS = (1, 4, 8)


@dataclass
class Check:
    name: str
    module: str
    run: Callable[[], CheckResult]


class VerifyController:
    """
    Controller untuk verification

    Menangani:
    - Check registry per module (gfpoly, partitions, primecount, census,
      divstats, appendix, sampler)
    - Scoped execution with per-check error capture
    - JSON summary rendering
    """

    def __init__(self, config=None, run_config=None):
        self.logger = logging.getLogger(__name__)
        self.settings = build_settings(config, run_config)
        self.gfpoly = GFPolyService(self.settings)
        self.partitions = PartitionService(self.settings)
        self.primecount = PrimeCountService(self.settings)
        self.census = CensusService(self.settings, self.gfpoly, self.partitions, self.primecount)
        self.divstats = DivStatsService(self.settings, self.partitions, self.primecount)
        self.sampler = SamplerService(self.settings, self.gfpoly)
        self.formatter = ReportFormatter(self.census.params)
        self.checks = self._register()

    def _register(self) -> List[Check]:
        return [
            Check('gfpoly_rank_roundtrip', 'gfpoly', self.check_rank_roundtrip),
            Check('gfpoly_table_factorization', 'gfpoly', self.check_table_factorization),
            Check('gfpoly_prime_counts', 'gfpoly', self.check_table_prime_counts),
            Check('partition_enumeration', 'partitions', self.check_partition_enumeration),
            Check('cycle_type_probabilities', 'partitions', self.check_cycle_type_probabilities),
            Check('subset_sum_symmetry', 'partitions', self.check_subset_sum_symmetry),
            Check('gauss_identity', 'primecount', self.check_gauss_identity),
            Check('count_with_type', 'primecount', self.check_count_with_type),
            Check('inverse_prime_sums', 'primecount', self.check_inverse_prime_sums),
            Check('degree_intervals', 'primecount', self.check_degree_intervals),
            Check('census_anchors', 'census', self.check_census_anchors),
            Check('count_H_matches_brute', 'census', self.check_count_H_brute),
            Check('count_H_squarefree_matches_brute', 'census', self.check_count_H_squarefree_brute),
            Check('count_T_matches_brute', 'census', self.check_count_T_brute),
            Check('census_symmetry', 'census', self.check_census_symmetry),
            Check('count_worker_invariance', 'census', self.check_count_worker_invariance),
            Check('bbr_discrepancy', 'census', self.check_bbr_discrepancy),
            Check('divisor_profile', 'census', self.check_divisor_profile),
            Check('divisor_sum_ratio', 'census', self.check_divisor_sum_ratio),
            Check('count_rough_matches_brute', 'appendix', self.check_rough_brute),
            Check('rough_ratio_bounded', 'appendix', self.check_rough_ratio),
            Check('rough_product_discrepancy', 'appendix', self.check_rough_product),
            Check('count_squarefull_matches_brute', 'appendix', self.check_squarefull_brute),
            Check('squarefull_tail', 'appendix', self.check_squarefull_tail),
            Check('tau_squarefull_sum', 'appendix', self.check_tau_squarefull),
            Check('squarefull_reduction', 'appendix', self.check_squarefull_reduction),
            Check('squarefree_totals', 'appendix', self.check_squarefree_totals),
            Check('clustering_examples', 'divstats', self.check_clustering_examples),
            Check('cauchy_schwarz_chain', 'divstats', self.check_cauchy_schwarz),
            Check('L_bounds_random', 'divstats', self.check_L_bounds_random),
            Check('truncated_sums', 'divstats', self.check_truncated_sums),
            Check('lower_bound_family', 'divstats', self.check_lower_bound_family),
            Check('block_family_sums', 'divstats', self.check_block_family_sums),
            Check('sampler_matches_exact', 'sampler', self.check_sampler_exact),
            Check('sampler_deterministic', 'sampler', self.check_sampler_deterministic),
        ]

    # ------------------------------------------------------------------
    # Execution
    # ------------------------------------------------------------------

    def run(self, scope: str = 'all') -> Tuple[List[Dict[str, Any]], str]:
        selected = [c for c in self.checks if scope == 'all' or c.module == scope]
        results = []
        for check in selected:
            self.logger.info(f"verify: {check.name}")
            try:
                passed, details = check.run()
            except (LabError, ArithmeticError, ValueError) as e:
                self.logger.error(f"verify: {check.name} raised {type(e).__name__}: {e}")
                passed, details = False, {'error': type(e).__name__, 'message': str(e)}
            if not passed:
                self.logger.warning(f"verify: {check.name} FAILED")
            results.append({'name': check.name, 'module': check.module, 'passed': bool(passed), 'details': details})
        return results, self.formatter.verify_summary(scope, results)

    # ------------------------------------------------------------------
    # gfpoly
    # ------------------------------------------------------------------

    def check_rank_roundtrip(self) -> CheckResult:
        bad = [(p, n, k) for p, n in ((2, 5), (3, 3), (5, 2))
               for k in range(p ** n) if self.gfpoly.rank(self.gfpoly.unrank(p, n, k)) != k]
        return not bad, {'mismatches': bad[:5]}

    def check_table_factorization(self) -> CheckResult:
        bad = []
        for p, N in ((2, 8), (3, 5)):
            table = self.gfpoly.build_spf(p, N)
            for index in range(table.offsets[N + 1]):
                poly = table.poly_at(index)
                if self.gfpoly.expand(self.gfpoly.factorize(poly, table), table) != poly:
                    bad.append(str(poly))
                elif poly.degree <= 6 and table.is_prime_index(index) != self.gfpoly.is_irreducible(poly):
                    bad.append(str(poly))
        return not bad, {'mismatches': bad[:5]}

    def check_table_prime_counts(self) -> CheckResult:
        rows = []
        for p, N in ((2, 10), (3, 6), (5, 4)):
            table = self.gfpoly.build_spf(p, N)
            for d in range(1, N + 1):
                rows.append((p, d, len(table.prime_indices(d)), self.primecount.prime_poly_count(p, d)))
        bad = [row for row in rows if row[2] != row[3]]
        return not bad, {'checked': len(rows), 'mismatches': bad}

    # ------------------------------------------------------------------
    # partitions
    # ------------------------------------------------------------------

    def check_partition_enumeration(self, top: int = 60) -> CheckResult:
        bad = []
        for n in range(0, top + 1):
            seen, previous, ordered = 0, None, True
            for parts in self.partitions.iter_parts(n):
                if previous is not None and parts >= previous:
                    ordered = False
                previous = parts
                seen += 1
            if seen != self.partitions.count_partitions(n) or not ordered:
                bad.append(n)
        return not bad, {'bad_n': bad, f'p({top})': self.partitions.count_partitions(top)}

    def check_cycle_type_probabilities(self, top: int = 40) -> CheckResult:
        totals = {n: sum((self.partitions.cycle_type_probability(lam)
                          for lam in self.partitions.enumerate_partitions(n)), Fraction(0))
                  for n in range(1, top + 1)}
        bad = [n for n, total in totals.items() if total != 1]
        return not bad, {'bad_n': bad}

    def check_subset_sum_symmetry(self, top: int = 40) -> CheckResult:
        # |Λ(n,b)| = |Λ(n,n-b)|, one subset-sum mask per partition
        bad = []
        for n in range(1, top + 1):
            counts = [0] * (n + 1)
            for parts in self.partitions.iter_parts(n):
                mask = subset_sum_mask(Counter(parts))
                for b in range(n + 1):
                    counts[b] += (mask >> b) & 1
            if counts != counts[::-1]:
                bad.append(n)
        return not bad, {'bad_n': bad}

    # ------------------------------------------------------------------
    # primecount
    # ------------------------------------------------------------------

    def check_gauss_identity(self) -> CheckResult:
        bad = []
        for q in (2, 3, 4, 5, 8, 9):
            seq = self.primecount.prime_count_sequence(q, 24)
            if not seq.gauss_holds():
                bad.append(q)
        return not bad, {'failing_q': bad}

    def check_count_with_type(self) -> CheckResult:
        bad = []
        for q in (2, 3, 4):
            for n in range(1, 11):
                total = sum(self.primecount.count_with_type(q, lam) for lam in self.partitions.enumerate_partitions(n))
                if total != q ** n:
                    bad.append({'q': q, 'n': n, 'total': total})
        for p, top in BRUTE_TYPE_GRID:
            table = self.gfpoly.build_spf(p, top)
            for n in range(1, top + 1):
                census = self.gfpoly.type_census(table, n)
                for lam in self.partitions.enumerate_partitions(n):
                    if census.get(lam, 0) != self.primecount.count_with_type(p, lam):
                        bad.append({'q': p, 'n': n, 'type': lam.to_string()})
        return not bad, {'grid': [list(row) for row in BRUTE_TYPE_GRID], 'mismatches': bad[:5]}

    def check_inverse_prime_sums(self) -> CheckResult:
        worst = 0.0
        bad = []
        for q in (2, 3, 4, 5):
            for d1 in (2, 3, 5, 10, 50):
                for d2 in sorted({d1, 100, 200}):
                    value = self.primecount.inverse_prime_sum(q, d1, d2)
                    gap = abs(float(value) - math.log(d2 / d1))
                    worst = max(worst, gap * d1)
                    if gap > 2 / d1:
                        bad.append((q, d1, d2))
        return not bad, {'max_gap_times_d1': worst, 'violations': bad}

    def check_degree_intervals(self) -> CheckResult:
        log2 = math.log(2)
        bad = []
        details = {}
        for q in (2, 3, 4, 5):
            intervals = self.primecount.build_degree_intervals(q, 8)
            details[str(q)] = intervals.boundaries
            for j in range(1, intervals.block_count + 1):
                low, high = intervals.mass_bounds[j - 1]
                if not intervals.overflow[j - 1] and low > log2:
                    bad.append((q, j))
                lo, hi = intervals.block(j)
                if hi <= lo:
                    bad.append((q, j))
        return not bad, {'boundaries': details, 'violations': bad}

    # ------------------------------------------------------------------
    # census
    # ------------------------------------------------------------------

    def check_census_anchors(self) -> CheckResult:
        values = {
            'H(2,2,1)': self.census.count_H(2, 2, 1).count,
            'H(2,4,2)': self.census.count_H(2, 4, 2).count,
            'T(4,2)': self.census.count_T(4, 2).count,
            'M(2,4)': self.census.count_M(2, 4).count,
            'brute_H(3,2,1)': self.census.brute_H(3, 2, 1),
            'delta': self.census.params.delta_text
        }
        expected = {'H(2,2,1)': 3, 'H(2,4,2)': 9, 'T(4,2)': 10, 'M(2,4)': 9, 'brute_H(3,2,1)': 6,
                    'delta': '0.086071'}
        return values == expected, {'values': values}

    def check_count_H_brute(self) -> CheckResult:
        bad = []
        for p, top in BRUTE_H_GRID:
            self.gfpoly.build_spf(p, top)
            for n in range(0, top + 1):
                brute = self.census.brute_H_profile(p, n)
                exact = [self.census.count_H(p, n, b).count for b in range(n + 1)]
                if brute != exact:
                    bad.append({'p': p, 'n': n})
        return not bad, {'mismatches': bad}

    def check_count_H_squarefree_brute(self) -> CheckResult:
        bad = []
        for p, top in ((2, 8), (3, 5)):
            for n in range(0, top + 1):
                brute = self.census.brute_H_profile(p, n, squarefree=True)
                exact = [self.census.count_H_squarefree(p, n, b).count for b in range(n + 1)]
                if brute != exact:
                    bad.append({'p': p, 'n': n})
        return not bad, {'mismatches': bad}

    def check_count_T_brute(self) -> CheckResult:
        bad = [(n, b) for n in range(0, 9) for b in range(n + 1)
               if self.census.count_T(n, b).count != self.census.brute_T(n, b)]
        return not bad, {'mismatches': bad}

    def check_census_symmetry(self) -> CheckResult:
        bad = []
        for n in range(0, 13):
            for b in range(n + 1):
                if self.census.count_T(n, b).count != self.census.count_T(n, n - b).count:
                    bad.append(('T', n, b))
                h = self.census.count_H(3, n, b)
                if h.count != self.census.count_H(3, n, n - b).count or h.count > 3 ** n:
                    bad.append(('H', n, b))
        return not bad, {'violations': bad[:5]}

    def check_count_worker_invariance(self) -> CheckResult:
        profiles = {}
        for workers in WORKER_COUNTS:
            census = CensusService(dict(self.settings, THREADS=workers),
                                   self.gfpoly, self.partitions, self.primecount)
            profiles[workers] = ([census.count_T(20, b).count for b in range(21)],
                                 [census.count_H(3, 16, b).count for b in range(17)])
        ok = all(profile == profiles[1] for profile in profiles.values())
        return ok, {'workers': list(WORKER_COUNTS)}

    def check_bbr_discrepancy(self) -> CheckResult:
        sups = {}
        ok = self.census.bbr_discrepancy(2, 1)[0] == 0 and self.census.bbr_discrepancy(2, 2)[0] == Fraction(1, 2)
        for n in range(1, 9):
            sweep = self.census.bbr_sweep(n, 1024)
            by_q = {q: value for q, value, _ in sweep['rows']}
            near, far = by_q[512], by_q[1024]
            # scaled gaps converge as q grows
            if far and abs(near - far) > far / 10:
                ok = False
            sups[str(n)] = {'sup': float(sweep['sup']), 'at_q': sweep['sup_q'],
                            'partition': sweep['sup_partition'].to_string(), 'q1024': float(far)}
        return ok, {'c(n)': sups}

    def check_divisor_profile(self) -> CheckResult:
        table = self.gfpoly.build_spf(2, 2)
        x = self.gfpoly.unrank(2, 1, 0)
        x1 = self.gfpoly.unrank(2, 1, 1)
        product = self.gfpoly.poly_mul(x, x1)
        square = self.gfpoly.poly_mul(x, x)
        tau_xy, profile_xy = self.census.tau_and_divisor_profile(self.gfpoly.factorize(product, table))
        tau_sq, profile_sq = self.census.tau_and_divisor_profile(self.gfpoly.factorize(square, table))
        ok = (tau_xy, profile_xy) == (4, [1, 2, 1]) and (tau_sq, profile_sq) == (3, [1, 1, 1])
        return ok, {'x(x+1)': profile_xy, 'x^2': profile_sq}

    def check_divisor_sum_ratio(self) -> CheckResult:
        ratios = [self.census.divisor_sum_ratio(2, n, b) for n in range(2, 13) for b in range(1, min(8, n) + 1)]
        low = min(ratios)
        return low > 0, {'min_ratio': float(low), 'max_ratio': float(max(ratios))}

    # ------------------------------------------------------------------
    # appendix
    # ------------------------------------------------------------------

    def check_rough_brute(self) -> CheckResult:
        bad = []
        for p, top in BRUTE_APPENDIX_GRID:
            self.gfpoly.build_spf(p, top)
            for n in range(1, top + 1):
                for d in range(1, n + 1):
                    if self.census.count_rough(p, n, d) != self.census.brute_rough(p, n, d):
                        bad.append((p, n, d))
        anchor = self.census.count_rough(2, 3, 2) == 2
        return not bad and anchor, {'mismatches': bad}

    def check_rough_ratio(self) -> CheckResult:
        ratios = [Fraction(self.census.count_rough(q, n, d) * d, q ** n)
                  for q in (2, 3, 5) for n in range(1, 31) for d in range(1, n + 1)]
        low, high = min(ratios), max(ratios)
        return low > 0, {'c1': float(low), 'c2': float(high)}

    def check_rough_product(self) -> CheckResult:
        rows = {d: self.census.rough_product_discrepancy(2, 12, d) for d in range(1, 7)}
        ok = rows[1]['discrepancy'] == 0
        return ok, {str(d): float(row['relative']) for d, row in rows.items()}

    def check_squarefull_brute(self) -> CheckResult:
        bad = []
        for p, top in BRUTE_APPENDIX_GRID:
            series = self.census.squarefull_series(p, top)
            for n in range(0, top + 1):
                if series[n] != self.census.brute_squarefull(p, n):
                    bad.append((p, n))
        anchors = (self.census.count_squarefull(2, 5), self.census.count_squarefull(3, 4))
        return not bad and anchors == (4, 9), {'mismatches': bad, 'anchors': anchors}

    def check_squarefull_tail(self) -> CheckResult:
        bad = []
        for q in (2, 3):
            for C in range(0, 31):
                _, upper = self.census.squarefull_tail(q, C)
                if upper > 4 * q ** (-0.4 * C):
                    bad.append((q, C, upper))
        return not bad, {'violations': bad}

    def check_tau_squarefull(self) -> CheckResult:
        values = [float(self.census.tau_squarefull_sum(q, 40)) for q in (2, 3, 5, 7)]
        ok = all(v > 1 for v in values) and all(a > b for a, b in zip(values, values[1:]))
        return ok, {'values': dict(zip(('2', '3', '5', '7'), values))}

    def check_squarefull_reduction(self) -> CheckResult:
        bad = []
        for n in range(0, 9):
            for b in range(n + 1):
                row = self.census.squarefull_reduction_check(2, n, b)
                if not row['holds']:
                    bad.append(row)
        return not bad, {'violations': bad}

    def check_squarefree_totals(self) -> CheckResult:
        bad = [(q, n) for q in (2, 3, 4) for n in range(2, 9)
               if self.census.count_H_squarefree(q, n, 0).count != q ** n - q ** (n - 1)]
        return not bad, {'violations': bad}

    # ------------------------------------------------------------------
    # divstats
    # ------------------------------------------------------------------

    def check_clustering_examples(self) -> CheckResult:
        pair = self.divstats.clustering((1, 1))
        prime = self.divstats.clustering((5,))
        unit = self.divstats.clustering(())
        ok = ((pair.degrees, pair.L, pair.tau_d, pair.W) == ([0, 1, 2], 3, [1, 2, 1], 6)
              and (prime.L, prime.W) == (2, 2) and (unit.degrees, unit.L, unit.W) == ([0], 1, 1))
        return ok, {'pair': pair.to_dict()}

    def check_cauchy_schwarz(self) -> CheckResult:
        bad, evaluated = [], 0
        for q in (2, 3):
            for d in (1, 2, 3, None):
                for m in (0, 2):
                    for k in (None, 1, 2, 3):
                        L, W, tau = self.divstats.sum_LW_over_squarefree(q, 16, d, m, k)
                        evaluated += 1
                        if tau * tau > L * W:
                            bad.append((q, d, m, k))
        return not bad, {'evaluated': evaluated, 'violations': bad}

    def check_L_bounds_random(self, trials: int = 10 ** 4, seed: int = 7) -> CheckResult:
        rng = np.random.default_rng(seed)
        bad = []
        for _ in range(trials):
            k = int(rng.integers(0, 13))
            pairs = [(int(rng.integers(1, 21)), int(rng.integers(1, 4))) for _ in range(k)]
            report = self.divstats.check_L_bounds(Factorization.from_degrees(pairs))
            if not report['passed']:
                bad.append(report)
        return not bad, {'trials': trials, 'violations': bad[:3]}

    def check_truncated_sums(self) -> CheckResult:
        s_example = self.divstats.truncated_S(2, 2, 1) == Fraction(3, 4)
        lw_example = self.divstats.sum_LW_over_squarefree(2, 2, 1, 2)[0] == Fraction(3, 4)
        t = self.divstats.truncated_T(2, 4, 2, 12)
        t_k = sum((self.divstats.truncated_T_k(2, 4, 2, k, 12) for k in range(0, 13)), Fraction(0))
        monotone = all(self.divstats.truncated_T(2, 3, 1, top) <= self.divstats.truncated_T(2, 3, 1, top + 1)
                       for top in range(0, 10))
        ratios = self.divstats.T_k_ratios(2, 8, 4, 2, 12)
        ok = s_example and lw_example and t == t_k and monotone
        return ok, {'S(2,2)_deg1': s_example, 'sum_T_k_equals_T': t == t_k, 'T_k_ratios': ratios}

    def check_lower_bound_family(self) -> CheckResult:
        family = self.divstats.build_lower_bound_family(2, 1024, 4)
        ok = family.cap_ok and family.min_f >= Fraction(1, 2) and family.k == 2
        return ok, family.to_dict()

    def check_block_family_sums(self) -> CheckResult:
        intervals = self.primecount.build_degree_intervals(3, 4)
        rows = [self.divstats.block_family_sums(3, vector, intervals, 10)
                for vector in ((0, 1), (0, 2), (0, 1, 1), (0, 0, 1))]
        ok = all(row['upper_constant'] > 0 and row['lower_constant'] > 0 for row in rows)
        return ok, {'constants': [(row['vector'], row['upper_constant'], row['lower_constant']) for row in rows]}

    # ------------------------------------------------------------------
    # sampler
    # ------------------------------------------------------------------

    def check_sampler_exact(self) -> CheckResult:
        t = self.sampler.estimate_T_density(8, 4, 20000, 7, threads=1)
        h = self.sampler.estimate_H_density(2, 10, 5, 20000, 7)
        exact_t = self.census.count_T(8, 4).density
        exact_h = self.census.count_H(2, 10, 5).density
        ok = (abs(t.estimate - float(exact_t)) <= 4 * t.standard_error + 1e-12
              and abs(h.estimate - float(exact_h)) <= 4 * h.standard_error + 1e-12)
        return ok, {'T': [t.estimate, float(exact_t)], 'H': [h.estimate, float(exact_h)]}

    def check_sampler_deterministic(self) -> CheckResult:
        hits = {workers: self.sampler.estimate_T_density(12, 5, 5000, 11, threads=workers).hits
                for workers in WORKER_COUNTS}
        repeat = self.sampler.estimate_T_density(12, 5, 5000, 11, threads=1).hits
        ok = len(set(hits.values())) == 1 and repeat == hits[1]
        return ok, {'hits': {str(w): h for w, h in hits.items()}}
