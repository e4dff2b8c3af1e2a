"""
Run Parameter Validators
========================

Utilities untuk validasi command-line requests before any service runs.

Every validator returns a dict with 'valid', 'message' and 'errors'; the
CLI turns an invalid result into a usage error.
"""

from typing import Any, Dict, List, Optional

from app.models.lab_models import RunConfig
from app.services.primecount_service import is_prime_power

SUBCOMMANDS = ('count', 'verify', 'fit', 'construct', 'sample')
COUNT_KINDS = ('H', 'M', 'T', 'Hsf')
SAMPLE_KINDS = ('H', 'T')
FORMATS = ('csv', 'json')
MODELS = ('asymptotic', 'naive')
SCOPES = ('gfpoly', 'partitions', 'primecount', 'census', 'divstats', 'appendix', 'sampler', 'all')


def parse_int_list(text: Optional[str]) -> List[int]:
    """
    Parse '4', '2,4,8', '2:8' (inclusive) or '2:16:2' into a sorted list
    of distinct integers.

    Raises:
        ValueError: on malformed input or an empty range
    """
    if text is None:
        return []
    values = set()
    for chunk in str(text).split(','):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty item in '{text}'")
        if ':' in chunk:
            pieces = [int(piece) for piece in chunk.split(':')]
            if len(pieces) not in (2, 3):
                raise ValueError(f"range '{chunk}' must be start:stop or start:stop:step")
            start, stop = pieces[0], pieces[1]
            step = pieces[2] if len(pieces) == 3 else 1
            if step < 1:
                raise ValueError(f"range step must be positive in '{chunk}'")
            span = range(start, stop + 1, step)
            if not span:
                raise ValueError(f"range '{chunk}' is empty")
            values.update(span)
        else:
            values.add(int(chunk))
    return sorted(values)


def _int_list(params: Dict[str, Any], key: str, errors: List[str]) -> Optional[List[int]]:
    try:
        return parse_int_list(params.get(key))
    except ValueError as e:
        errors.append(f'--{key}: {e}')
        return None


def validate_run_parameters(params: Dict[str, Any]) -> Dict[str, Any]:
    """
    Validate parsed command-line parameters

    Args:
        params (dict): argparse namespace as a dict

    Returns:
        dict: Validation result dengan 'run_config' when valid
    """
    errors: List[str] = []
    subcommand = params.get('command')
    if subcommand not in SUBCOMMANDS:
        return {'valid': False, 'message': f'Unknown subcommand: {subcommand}', 'errors': [f'subcommand {subcommand}']}

    kind = params.get('kind')
    q = params.get('q')
    n_values = _int_list(params, 'n', errors) or []
    if params.get('deg') is not None:
        deg_values = _int_list(params, 'deg', errors) or []
        n_values = sorted(set(n_values) | set(deg_values))
    b_values = _int_list(params, 'b', errors) if params.get('b') is not None else None

    fmt = params.get('format') or 'csv'
    if fmt not in FORMATS:
        errors.append(f'format must be one of: {", ".join(FORMATS)}')

    threads = params.get('threads') or 1
    if threads < 1:
        errors.append('threads must be >= 1')

    budgets = {}
    for key in ('max_table_entries', 'max_partitions'):
        value = params.get(key)
        if value is not None:
            if value < 1:
                errors.append(f'{key} must be positive')
            budgets[key] = value

    if q is not None and not is_prime_power(q):
        errors.append(f'q must be a prime power >= 2, got {q}')
    if any(n < 0 for n in n_values):
        errors.append('n values must be nonnegative')
    if b_values is not None and any(b < 0 for b in b_values):
        errors.append('b values must be nonnegative')

    if subcommand in ('count', 'fit'):
        allowed = COUNT_KINDS if subcommand == 'count' else ('H', 'T')
        if kind not in allowed:
            errors.append(f'--kind must be one of: {", ".join(allowed)}')
        if kind in ('H', 'M', 'Hsf') and q is None:
            errors.append(f'--q is required for kind {kind}')
        if not n_values:
            errors.append('--n (or --deg) is required')
        if kind == 'M' and any(n % 2 for n in n_values):
            errors.append('M(2n) needs even degrees')
        if subcommand == 'fit' and params.get('model', 'asymptotic') not in MODELS:
            errors.append(f'model must be one of: {", ".join(MODELS)}')

    if subcommand == 'sample':
        if kind not in SAMPLE_KINDS:
            errors.append(f'--kind must be one of: {", ".join(SAMPLE_KINDS)}')
        if kind == 'H' and q is None:
            errors.append('--q is required for kind H')
        if not n_values or not b_values:
            errors.append('--n and --b are required')
        if (params.get('trials') or 0) < 1:
            errors.append('--trials must be >= 1')
        if (params.get('seed') or 0) < 0:
            errors.append('--seed must be nonnegative')

    if subcommand == 'construct':
        if q is None:
            errors.append('--q is required')
        family = bool(params.get('family'))
        intervals = params.get('intervals') or 0
        if not family and intervals < 1:
            errors.append('construct needs --intervals J >= 1 or --family')
        if family and not b_values:
            errors.append('--family needs --b')
        if family and (params.get('M') or 4) < 1:
            errors.append('--M must be >= 1')

    if subcommand == 'verify' and (params.get('scope') or 'all') not in SCOPES:
        errors.append(f'scope must be one of: {", ".join(SCOPES)}')

    if errors:
        return {'valid': False, 'message': 'Parameter validation failed: ' + '; '.join(errors), 'errors': errors}

    run_config = RunConfig(
        subcommand=subcommand,
        kind=kind,
        q=q,
        n_values=n_values,
        b_values=b_values,
        trials=params.get('trials') or 0,
        seed=params.get('seed') if params.get('seed') is not None else 7,
        threads=threads,
        fmt=fmt,
        output=params.get('output'),
        scope=params.get('scope') or 'all',
        intervals=params.get('intervals') or 0,
        family=bool(params.get('family')),
        M=params.get('M') or 4,
        gnuplot=bool(params.get('gnuplot')),
        model=params.get('model') or 'asymptotic',
        budgets=budgets
    )
    return {'valid': True, 'message': 'Parameters are valid', 'errors': [], 'run_config': run_config}
