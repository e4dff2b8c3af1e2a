"""
Lab Controller
==============

Controller untuk count, fit, construct dan sample requests: turns a
validated RunConfig into service calls and a rendered report.
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

from app.config import resolve_settings
from app.exceptions import UsageError
from app.models.lab_models import CountReport, RunConfig
from app.services.census_service import CensusService
from app.services.divstats_service import DivStatsService
from app.services.gfpoly_service import GFPolyService
from app.services.partition_service import PartitionService
from app.services.primecount_service import PrimeCountService
from app.services.sampler_service import SamplerService
from app.utils.file_manager import FileManager
from app.utils.report_formatter import (
    COUNT_COLUMNS, FIT_COLUMNS, SAMPLE_COLUMNS, ReportFormatter, format_decimal
)

INTERVAL_COLUMNS = ['j', 'first_degree', 'last_degree', 'mass', 'mass_low', 'mass_high', 'overflow']
FAMILY_COLUMNS = ['q', 'b', 'M', 'k', 'J', 'K', 'size', 'min_f', 'max_cap_degree', 'cap', 'cap_ok',
                  'weighted_sum', 'tree_ratio', 'shape_ratio']


def build_settings(config=None, run_config: Optional[RunConfig] = None) -> Dict[str, Any]:
    """Configuration settings with the request's budgets and thread count applied."""
    settings = resolve_settings(config)
    if run_config is not None:
        settings['THREADS'] = run_config.threads
        if 'max_table_entries' in run_config.budgets:
            settings['MAX_TABLE_ENTRIES'] = run_config.budgets['max_table_entries']
        if 'max_partitions' in run_config.budgets:
            settings['MAX_PARTITIONS'] = run_config.budgets['max_partitions']
    return settings


class LabController:
    """
    Controller untuk laboratory runs

    Menangani:
    - Exact count grids
    - Asymptotic fit tables
    - Degree-interval and family construction
    - Monte-Carlo sampling with a report digest
    """

    def __init__(self, config=None, run_config: Optional[RunConfig] = None):
        """Initialize controller; services are created on first use"""
        self.logger = logging.getLogger(__name__)
        self.settings = build_settings(config, run_config)
        self.formatter = None
        self.file_manager = FileManager()
        self._initialized = False

    def _ensure_initialized(self):
        """Ensure semua services sudah diinisialisasi"""
        if not self._initialized:
            self.gfpoly = GFPolyService(self.settings)
            self.partitions = PartitionService(self.settings)
            self.primecount = PrimeCountService(self.settings)
            self.census = CensusService(self.settings, self.gfpoly, self.partitions, self.primecount)
            self.divstats = DivStatsService(self.settings, self.partitions, self.primecount)
            self.sampler = SamplerService(self.settings, self.gfpoly)
            self.formatter = ReportFormatter(self.census.params)
            self._initialized = True

    def _count_report(self, kind: str, q: Optional[int], n: int, b: int) -> CountReport:
        if kind == 'H':
            return self.census.count_H(q, n, b)
        if kind == 'Hsf':
            return self.census.count_H_squarefree(q, n, b)
        if kind == 'T':
            return self.census.count_T(n, b)
        if kind == 'M':
            return self.census.count_M(q, n)
        raise UsageError(f"unknown count kind {kind}")

    def _grid(self, run_config: RunConfig, minimum_b: int = 0) -> List[Tuple[int, int]]:
        cells = []
        for n in run_config.n_values:
            if run_config.kind == 'M':
                cells.append((n, n // 2))
                continue
            b_values = run_config.b_values if run_config.b_values is not None else range(minimum_b, n + 1)
            cells.extend((n, b) for b in b_values if minimum_b <= b <= n)
        if not cells:
            raise UsageError("the requested (n, b) grid is empty")
        return cells

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def run_count(self, run_config: RunConfig) -> str:
        self._ensure_initialized()
        rows = [
            self.formatter.count_row(self._count_report(run_config.kind, run_config.q, n, b))
            for n, b in self._grid(run_config)
        ]
        self.logger.info(f"count kind={run_config.kind}: {len(rows)} rows")
        meta = {'kind': run_config.kind, 'q': run_config.q, 'delta': self.census.params.delta_text}
        return self.formatter.render('count', COUNT_COLUMNS, rows, run_config.fmt, meta)

    def run_fit(self, run_config: RunConfig) -> str:
        """Ratio table count · b^δ (log b)^{3/2} / total over b >= 2."""
        self._ensure_initialized()
        rows = [
            self.formatter.fit_row(self._count_report(run_config.kind, run_config.q, n, b), run_config.model)
            for n, b in self._grid(run_config, minimum_b=2)
        ]
        delta = self.census.params.delta_text
        header = [f"delta={delta}", f"kind={run_config.kind} q={run_config.q} model={run_config.model}"]
        meta = {'delta': delta, 'kind': run_config.kind, 'q': run_config.q, 'model': run_config.model}
        return self.formatter.render('fit', FIT_COLUMNS, rows, run_config.fmt, meta, header, run_config.gnuplot)

    def run_construct(self, run_config: RunConfig) -> str:
        self._ensure_initialized()
        q = run_config.q
        if run_config.family:
            intervals = None
            if run_config.intervals:
                intervals = self.primecount.build_degree_intervals(q, run_config.intervals)
            rows = []
            for b in run_config.b_values:
                family = self.divstats.build_lower_bound_family(q, b, run_config.M, intervals)
                data = family.to_dict()
                data['K'] = format_decimal(family.K)
                data['tree_ratio'] = format_decimal(family.tree_ratio)
                data['shape_ratio'] = format_decimal(family.shape_ratio)
                rows.append(data)
                self.logger.info(f"family b={b}: |B|={family.size}, min f={family.min_f}, cap_ok={family.cap_ok}")
            meta = {'q': q, 'M': run_config.M, 'sample': rows[0]['sample'] if rows else []}
            return self.formatter.render('construct', FAMILY_COLUMNS, rows, run_config.fmt, meta)

        intervals = self.primecount.build_degree_intervals(q, run_config.intervals)
        rows = []
        for block in intervals.to_dict()['blocks']:
            rows.append({
                'j': block['j'],
                'first_degree': block['degrees'][0],
                'last_degree': block['degrees'][1],
                'mass': block['mass'],
                'mass_low': format_decimal(block['mass_low']),
                'mass_high': format_decimal(block['mass_high']),
                'overflow': block['overflow']
            })
        meta = {'q': q, 'K': format_decimal(intervals.measured_K)}
        return self.formatter.render('construct', INTERVAL_COLUMNS, rows, run_config.fmt, meta)

    def run_sample(self, run_config: RunConfig) -> Tuple[str, str]:
        """Sampling report and the sha256 digest of its text."""
        self._ensure_initialized()
        rows = []
        for n in run_config.n_values:
            for b in run_config.b_values:
                if b > n:
                    continue
                if run_config.kind == 'T':
                    estimate = self.sampler.estimate_T_density(n, b, run_config.trials, run_config.seed,
                                                               run_config.threads)
                else:
                    estimate = self.sampler.estimate_H_density(run_config.q, n, b, run_config.trials,
                                                               run_config.seed)
                rows.append(self.formatter.sample_row(estimate))
        if not rows:
            raise UsageError("the requested (n, b) grid is empty")
        meta = {'kind': run_config.kind, 'q': run_config.q, 'seed': run_config.seed, 'trials': run_config.trials}
        text = self.formatter.render('sample', SAMPLE_COLUMNS, rows, run_config.fmt, meta)
        return text, self.file_manager.digest(text)
