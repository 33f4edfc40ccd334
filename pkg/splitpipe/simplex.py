# -*- coding: utf-8 -*-
"""
Dense two-phase primal simplex.

Minimises ``objective @ x + constant`` subject to ``matrix @ x (sense) rhs``
and ``0 <= x <= upper``. Entering and leaving variables follow Bland's
rule, so degenerate problems terminate.
"""
import logging
from collections import namedtuple

import numpy as np

from .conf import get_setting
from .exceptions import SimplexIterationLimit

logger = logging.getLogger(__name__)

LE = '<='
EQ = '='
GE = '>='
SENSES = (LE, EQ, GE)

OPTIMAL = 'optimal'
INFEASIBLE = 'infeasible'
UNBOUNDED = 'unbounded'


BaseLinearProgram = namedtuple(
    'LinearProgram',
    field_names=[
        'objective',
        'matrix',
        'senses',
        'rhs',
        'upper',
        'constant',
        'columns',
        'row_names',
        'upper_bounds_implied',
    ]
)


class LinearProgram(BaseLinearProgram):
    """
    ``upper`` holds per-column upper bounds (``inf`` when absent). When
    ``upper_bounds_implied`` is set the constraints already keep every
    column below its bound and no bound rows are added.
    """
    __slots__ = ()

    @property
    def shape(self):
        return self.matrix.shape

    def residuals(self, x):
        """Per-row violation of ``x``; zero when satisfied."""
        lhs = self.matrix @ x
        violation = np.zeros(len(self.rhs))
        for row, sense in enumerate(self.senses):
            gap = lhs[row] - self.rhs[row]
            if sense == LE:
                violation[row] = max(gap, 0.0)
            elif sense == GE:
                violation[row] = max(-gap, 0.0)
            else:
                violation[row] = abs(gap)
        return violation

    def value(self, x):
        return float(self.objective @ x) + self.constant


def make_program(objective, rows, upper=None, constant=0.0, columns=None, upper_bounds_implied=False):
    """
    Convenience builder from dense rows given as ``(coefficients, sense, rhs)``
    or ``(coefficients, sense, rhs, name)``.
    """
    objective = np.asarray(objective, dtype=float)
    count = len(objective)
    matrix = np.zeros((len(rows), count))
    senses = []
    rhs = np.zeros(len(rows))
    names = []
    for index, row in enumerate(rows):
        matrix[index, :] = row[0]
        if row[1] not in SENSES:
            raise ValueError('Unknown constraint sense "{}".'.format(row[1]))
        senses.append(row[1])
        rhs[index] = row[2]
        names.append(row[3] if len(row) > 3 else 'r{}'.format(index))
    return LinearProgram(
        objective=objective,
        matrix=matrix,
        senses=tuple(senses),
        rhs=rhs,
        upper=np.full(count, np.inf) if upper is None else np.asarray(upper, dtype=float),
        constant=constant,
        columns=tuple(columns or ['x{}'.format(j) for j in range(count)]),
        row_names=tuple(names),
        upper_bounds_implied=upper_bounds_implied,
    )


SimplexResult = namedtuple('SimplexResult', field_names=['status', 'value', 'x', 'dual_value', 'pivots'])


class _Tableau(object):
    """
    Rows ``0..m-1`` hold ``B^-1 [A | b]``; ``basis[r]`` is the column basic
    in row ``r``.
    """

    def __init__(self, matrix, rhs, basis, tolerance, max_pivots):
        self.table = np.hstack([matrix, rhs[:, None]])
        self.basis = list(basis)
        self.tolerance = tolerance
        self.max_pivots = max_pivots
        self.pivots = 0

    def pivot(self, row, column):
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise SimplexIterationLimit(self.pivots - 1)
        table = self.table
        table[row, :] /= table[row, column]
        factors = table[:, column].copy()
        factors[row] = 0.0
        table -= np.outer(factors, table[row, :])
        self.basis[row] = column

    def reduced_costs(self, costs):
        basic = costs[self.basis]
        return costs - basic @ self.table[:, :-1]

    def run(self, costs, allowed):
        """Bland's rule on the columns flagged in ``allowed``. Returns False if unbounded."""
        tolerance = self.tolerance
        while True:
            reduced = self.reduced_costs(costs)
            candidates = np.nonzero((reduced < -tolerance) & allowed)[0]
            if not len(candidates):
                return True
            column = int(candidates[0])
            entries = self.table[:, column]
            rows = np.nonzero(entries > tolerance)[0]
            if not len(rows):
                return False
            ratios = self.table[rows, -1] / entries[rows]
            smallest = ratios.min()
            ties = rows[ratios <= smallest + tolerance * max(1.0, abs(smallest))]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, column)

    def solution(self, width):
        x = np.zeros(width)
        for row, column in enumerate(self.basis):
            if column < width:
                x[column] = self.table[row, -1]
        return x


def _standard_form(lp):
    matrix = np.asarray(lp.matrix, dtype=float)
    rhs = np.asarray(lp.rhs, dtype=float)
    senses = list(lp.senses)
    width = matrix.shape[1]
    if not lp.upper_bounds_implied:
        extra = [j for j in range(width) if np.isfinite(lp.upper[j])]
        if extra:
            bounds = np.zeros((len(extra), width))
            for row, column in enumerate(extra):
                bounds[row, column] = 1.0
            matrix = np.vstack([matrix, bounds])
            rhs = np.concatenate([rhs, lp.upper[extra]])
            senses += [LE] * len(extra)
    else:
        matrix = matrix.copy()
        rhs = rhs.copy()

    for row in range(len(rhs)):
        if rhs[row] < 0:
            matrix[row, :] *= -1.0
            rhs[row] = -rhs[row]
            senses[row] = {LE: GE, GE: LE, EQ: EQ}[senses[row]]
    return matrix, rhs, senses


def simplex_solve(lp, tolerance=None, max_pivots=None):
    """
    Solves ``lp`` and returns a SimplexResult. The dual value is ``y @ rhs``
    for the duals ``y`` of the final basis, so at optimality it matches
    the primal value.
    """
    if tolerance is None:
        tolerance = get_setting('SIMPLEX_TOLERANCE')
    if max_pivots is None:
        max_pivots = int(get_setting('SIMPLEX_MAX_PIVOTS'))

    matrix, rhs, senses = _standard_form(lp)
    rows, width = matrix.shape
    slack_columns = []
    artificial = []
    basis = [None] * rows
    blocks = [matrix]
    column = width

    for row, sense in enumerate(senses):
        unit = np.zeros((rows, 1))
        unit[row, 0] = 1.0
        if sense == LE:
            blocks.append(unit)
            slack_columns.append(column)
            basis[row] = column
            column += 1
        elif sense == GE:
            blocks.append(-unit)
            slack_columns.append(column)
            column += 1
    for row, sense in enumerate(senses):
        if basis[row] is None:
            unit = np.zeros((rows, 1))
            unit[row, 0] = 1.0
            blocks.append(unit)
            artificial.append(column)
            basis[row] = column
            column += 1

    full = np.hstack(blocks) if rows else np.zeros((0, width))
    total = full.shape[1]
    tableau = _Tableau(full, rhs, basis, tolerance, max_pivots)

    if artificial:
        phase_one = np.zeros(total)
        phase_one[artificial] = 1.0
        tableau.run(phase_one, np.ones(total, dtype=bool))
        infeasibility = float(phase_one[tableau.basis] @ tableau.table[:, -1])
        if infeasibility > tolerance * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            logger.debug('Phase one ended at {:.3g}; infeasible.'.format(infeasibility))
            return SimplexResult(INFEASIBLE, None, None, None, tableau.pivots)

        is_artificial = np.zeros(total, dtype=bool)
        is_artificial[artificial] = True
        redundant = []
        for row in range(rows):
            if not is_artificial[tableau.basis[row]]:
                continue
            entries = np.abs(tableau.table[row, :-1])
            entries[is_artificial] = 0.0
            candidates = np.nonzero(entries > tolerance)[0]
            if len(candidates):
                tableau.pivot(row, int(candidates[0]))
            else:
                redundant.append(row)
        if redundant:
            keep = [row for row in range(rows) if row not in redundant]
            tableau.table = tableau.table[keep, :]
            tableau.basis = [tableau.basis[row] for row in keep]
            full = full[keep, :]
            rhs = rhs[keep]
        allowed = ~is_artificial
    else:
        allowed = np.ones(total, dtype=bool)

    costs = np.zeros(total)
    costs[:width] = lp.objective
    if not tableau.run(costs, allowed):
        return SimplexResult(UNBOUNDED, -np.inf, None, None, tableau.pivots)

    x = tableau.solution(width)
    value = float(lp.objective @ x) + lp.constant
    basis_matrix = full[:, tableau.basis]
    duals = np.linalg.solve(basis_matrix.T, costs[tableau.basis]) if len(tableau.basis) else np.zeros(0)
    dual_value = float(duals @ rhs) + lp.constant
    logger.debug('Simplex optimum {:.6g} after {} pivots.'.format(value, tableau.pivots))
    return SimplexResult(OPTIMAL, value, x, dual_value, tableau.pivots)
