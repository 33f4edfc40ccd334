# -*- coding: utf-8 -*-
"""
Parameter sweeps over generated scenarios.

Trial ``t`` of every value uses seed ``seed + t``, so all values of a sweep
see the same random draws apart from the swept parameter.
"""
import logging
import math
import time
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor

from django.core.exceptions import ValidationError

from .exceptions import InfeasibleError
from .scenario import GeneratorSpec, generate_scenario
from .utils import get_scheme

logger = logging.getLogger(__name__)

# Swept parameter -> (generator field, multiplier to canonical units).
SWEEP_PARAMS = {
    'servers': ('servers', None),
    'bandwidth': ('bandwidth', 1e6),
    'compute': ('compute', 1e12),
    'memory': ('memory', None),
    'topology': ('topology', None),
}


Cell = namedtuple('Cell', field_names=['position', 'value', 'trial', 'seed', 'spec', 'schemes', 'options'])


def spec_for(param, value, base=None):
    """Generator knobs with ``param`` set to ``value`` (MHz for bandwidth, TFLOP/s for compute, GB for memory)."""
    if param not in SWEEP_PARAMS:
        raise ValidationError(
            'Unknown sweep parameter "%(param)s".', code='unknown_param', params={'param': param},
        )
    field, scale = SWEEP_PARAMS[param]
    base = base or GeneratorSpec()
    if scale is not None:
        value = float(value) * scale
    elif field == 'servers':
        value = int(value)
    return base._replace(**{field: value})


def build_cells(param, values, trials, seed=0, schemes=('bcd',), base=None, options=None):
    cells = []
    for position, value in enumerate(values):
        spec = spec_for(param, value, base)
        for trial in range(trials):
            cells.append(Cell(position, value, trial, seed + trial, spec, tuple(schemes), dict(options or {})))
    return cells


def run_cell(cell):
    scenario = generate_scenario(cell.seed, cell.spec)
    rows = []
    for order, key in enumerate(cell.schemes):
        started = time.perf_counter()
        row = {
            'position': cell.position,
            'order': order,
            'param_value': cell.value,
            'trial': cell.trial,
            'scheme': key,
        }
        try:
            result = get_scheme(key).solve(scenario, seed=cell.seed, **dict(cell.options))
        except InfeasibleError as error:
            logger.warning('Value {} trial {} scheme {}: {}'.format(cell.value, cell.trial, key, error))
            row.update(L_t=math.nan, T_f=math.nan, T_i=math.nan, b='')
        else:
            report = result.solution.report
            row.update(L_t=report.L_t, T_f=report.T_f, T_i=report.T_i, b=result.micro_batch)
        row['runtime_ms'] = (time.perf_counter() - started) * 1000.0
        rows.append(row)
    return rows


def run_sweep(param, values, trials=1, seed=0, schemes=('bcd',), base=None, options=None, jobs=1):
    """
    Rows for every (value, trial, scheme), sorted by value position, trial
    and scheme order whatever order the workers finish in.
    """
    cells = build_cells(param, values, trials, seed=seed, schemes=schemes, base=base, options=options)
    logger.info('Sweeping {} over {} values x {} trials ({} cells, {} jobs).'.format(
        param, len(values), trials, len(cells), jobs,
    ))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            batches = list(executor.map(run_cell, cells))
    else:
        batches = [run_cell(cell) for cell in cells]
    rows = [row for batch in batches for row in batch]
    return sorted(rows, key=lambda row: (row['position'], row['trial'], row['order']))
