"""
Report Formatter
================

Utility untuk formatting report rows as CSV, JSON or gnuplot text.

Counts are printed as decimal strings, real values with 15 significant
digits. Output never carries timestamps, so identical requests give
byte-identical reports.
"""

import csv
import io
import json
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence

import mpmath

from app.models.lab_models import AsymptoticParams, CountReport, SampleEstimate

COUNT_COLUMNS = ['kind', 'q', 'n', 'b', 'count', 'density', 'predicted', 'ratio']
SAMPLE_COLUMNS = COUNT_COLUMNS + ['trials', 'seed', 'ci_low', 'ci_high']
FIT_COLUMNS = ['n', 'b', 'count', 'predicted', 'ratio']

SIGNIFICANT_DIGITS = 15


def format_decimal(value: Any) -> Optional[str]:
    """15 significant digits; None stays None."""
    if value is None:
        return None
    with mpmath.workdps(30):
        if isinstance(value, Fraction):
            value = mpmath.mpf(value.numerator) / value.denominator
        elif isinstance(value, int):
            value = mpmath.mpf(value)
        return mpmath.nstr(mpmath.mpf(value), SIGNIFICANT_DIGITS)


class ReportFormatter:
    """
    Class untuk formatting laboratory reports

    Provides standard format untuk:
    - Count rows (CSV / JSON)
    - Sampling rows with interval columns
    - Fit tables with a δ header, optionally gnuplot-compatible
    - Verification summaries
    """

    def __init__(self, params: Optional[AsymptoticParams] = None):
        self.params = params or AsymptoticParams()

    # ------------------------------------------------------------------
    # Row builders
    # ------------------------------------------------------------------

    def count_row(self, report: CountReport) -> Dict[str, Any]:
        return {
            'kind': report.kind,
            'q': report.q,
            'n': report.n,
            'b': report.b,
            'count': str(report.count),
            'density': format_decimal(report.density),
            'predicted': format_decimal(report.predicted),
            'ratio': format_decimal(report.ratio)
        }

    def sample_row(self, estimate: SampleEstimate) -> Dict[str, Any]:
        predicted = self.params.predicted(1, estimate.b)
        ratio = None
        if predicted is not None:
            with mpmath.workdps(self.params.dps):
                ratio = mpmath.mpf(estimate.hits) / estimate.trials / predicted
        return {
            'kind': estimate.kind,
            'q': estimate.q,
            'n': estimate.n,
            'b': estimate.b,
            'count': str(estimate.hits),
            'density': format_decimal(Fraction(estimate.hits, estimate.trials)),
            'predicted': format_decimal(predicted),
            'ratio': format_decimal(ratio),
            'trials': estimate.trials,
            'seed': estimate.seed,
            'ci_low': format_decimal(estimate.ci_low),
            'ci_high': format_decimal(estimate.ci_high)
        }

    def fit_row(self, report: CountReport, model: str = 'asymptotic') -> Dict[str, Any]:
        """r(n,b) = count / predicted; the naive model predicts the total alone."""
        if model == 'naive':
            predicted = report.total
            ratio = Fraction(report.count, report.total)
        else:
            predicted, ratio = report.predicted, report.ratio
        return {
            'n': report.n,
            'b': report.b,
            'count': str(report.count),
            'predicted': format_decimal(predicted),
            'ratio': format_decimal(ratio)
        }

    # ------------------------------------------------------------------
    # Documents
    # ------------------------------------------------------------------

    @staticmethod
    def to_csv(columns: Sequence[str], rows: Iterable[Dict[str, Any]], header: Optional[List[str]] = None) -> str:
        """
        CSV with a fixed header. Missing predicted values print as nan and
        missing ratios are left empty.
        """
        buffer = io.StringIO()
        for line in header or []:
            buffer.write(f"# {line}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            cells = []
            for column in columns:
                value = row.get(column)
                if value is None:
                    value = 'nan' if column == 'predicted' else ''
                cells.append(value)
            writer.writerow(cells)
        return buffer.getvalue()

    @staticmethod
    def to_json(document: str, columns: Sequence[str], rows: Iterable[Dict[str, Any]],
                meta: Optional[Dict[str, Any]] = None) -> str:
        payload = {
            'document': document,
            'columns': list(columns),
            'meta': meta or {},
            'rows': [{column: row.get(column) for column in columns} for row in rows]
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + '\n'

    @staticmethod
    def to_gnuplot(columns: Sequence[str], rows: Sequence[Dict[str, Any]], header: Optional[List[str]] = None) -> str:
        """Whitespace columns, '#' comments, a blank line between n-blocks."""
        lines = [f"# {line}" for line in header or []]
        lines.append('# ' + ' '.join(columns))
        previous = None
        for row in rows:
            if previous is not None and row.get('n') != previous:
                lines.append('')
            previous = row.get('n')
            lines.append(' '.join('nan' if row.get(c) is None else str(row.get(c)) for c in columns))
        return '\n'.join(lines) + '\n'

    def render(self, document: str, columns: Sequence[str], rows: List[Dict[str, Any]], fmt: str,
               meta: Optional[Dict[str, Any]] = None, header: Optional[List[str]] = None,
               gnuplot: bool = False) -> str:
        if gnuplot:
            return self.to_gnuplot(columns, rows, header)
        if fmt == 'json':
            return self.to_json(document, columns, rows, meta)
        return self.to_csv(columns, rows, header)

    # ------------------------------------------------------------------
    # Summaries
    # ------------------------------------------------------------------

    def success_response(self, message: str, data: Optional[Any] = None) -> Dict[str, Any]:
        response = {'success': True, 'message': message}
        if data is not None:
            response['data'] = data
        return response

    def error_response(self, message: str, data: Optional[Any] = None, error_code: Optional[str] = None) -> Dict[str, Any]:
        response = {'success': False, 'error': message}
        if error_code:
            response['error_code'] = error_code
        if data is not None:
            response['data'] = data
        return response

    def verify_summary(self, scope: str, checks: List[Dict[str, Any]]) -> str:
        failed = [check['name'] for check in checks if not check['passed']]
        data = {
            'scope': scope,
            'total': len(checks),
            'passed': len(checks) - len(failed),
            'failed': failed,
            'checks': checks
        }
        if failed:
            response = self.error_response(f"{len(failed)} of {len(checks)} checks failed", data, 'CHECK_FAILURE')
        else:
            response = self.success_response(f"all {len(checks)} checks passed", data)
        response['document'] = 'verify'
        return json.dumps(response, indent=2, ensure_ascii=False, default=str) + '\n'
