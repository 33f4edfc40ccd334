# -*- coding: utf-8 -*-
"""
Exhaustive enumeration of plans (and micro-batches) for small instances.
"""
import logging
import math
from collections import namedtuple
from itertools import combinations, permutations, product

from .conf import get_setting
from .costmodel import check_feasibility, evaluate
from .exceptions import InfeasibleError, OracleLimitExceeded
from .models import SplitPlan
from .mspgraph import solution_key

logger = logging.getLogger(__name__)


OracleResult = namedtuple('OracleResult', field_names=['plan', 'micro_batch', 'report', 'evaluated', 'min_sum'])


def _placement_count(servers, hosts, allow_node_reuse):
    if allow_node_reuse:
        return servers * (servers - 1) ** (hosts - 1)
    return math.perm(servers, hosts)


def option_count(scenario, allow_node_reuse=None):
    """Number of canonical plans the enumeration visits at one micro-batch."""
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    servers = len(scenario.servers)
    return sum(
        math.comb(scenario.num_layers - 1, k - 1) * _placement_count(servers, k - 1, allow_node_reuse)
        for k in range(2, scenario.max_submodels + 1)
    )


def closed_form_option_count(scenario):
    """Closed-form size of the joint search space, counting every micro-batch."""
    servers = len(scenario.servers)
    return sum(
        scenario.minibatch * math.comb(scenario.num_layers - 1, k - 1) * math.factorial(k) * math.comb(servers, k)
        for k in range(2, scenario.max_submodels + 1)
    )


def iter_plans(scenario, allow_node_reuse=None):
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    servers = [server.id for server in scenario.servers]
    for k in range(2, scenario.max_submodels + 1):
        for cuts in combinations(range(1, scenario.num_layers), k - 1):
            if allow_node_reuse:
                placements = (
                    placement for placement in product(servers, repeat=k - 1)
                    if all(a != b for a, b in zip(placement, placement[1:]))
                )
            else:
                placements = permutations(servers, k - 1)
            for placement in placements:
                yield SplitPlan(cuts, placement)


def _check_limit(estimate, limit):
    if limit is None:
        limit = get_setting('ORACLE_LIMIT')
    if estimate > limit:
        raise OracleLimitExceeded(estimate, limit)


def _best_at(scenario, plans, b, allow_node_reuse, strict_ti=False):
    best = None
    best_key = None
    evaluated = 0
    min_sum = math.inf
    for plan in plans:
        evaluated += 1
        if check_feasibility(scenario, plan, b, allow_node_reuse=allow_node_reuse):
            continue
        report = evaluate(scenario, plan, b, strict_ti=strict_ti, check=False)
        min_sum = min(min_sum, report.T_f)
        key = solution_key(scenario, plan, report)
        if best_key is None or key < best_key:
            best, best_key = (plan, report), key
    return best, best_key, evaluated, min_sum


def enumerate_msp(scenario, b, limit=None, allow_node_reuse=None, strict_ti=None):
    """
    Best plan at micro-batch ``b`` by evaluating every canonical plan,
    ordered like the graph search. ``min_sum`` is the smallest ``T_f`` of
    any feasible plan.
    """
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    if strict_ti is None:
        strict_ti = get_setting('STRICT_TI')
    _check_limit(option_count(scenario, allow_node_reuse), limit)

    best, _, evaluated, min_sum = _best_at(scenario, iter_plans(scenario, allow_node_reuse), b, allow_node_reuse,
                                            strict_ti=strict_ti)
    if best is None:
        raise InfeasibleError('no_feasible_plan', 'None of {} plans is feasible at b={}.'.format(evaluated, b))
    logger.debug('Oracle at b={}: {} plans, L_t={:.6g}s.'.format(b, evaluated, best[1].L_t))
    return OracleResult(plan=best[0], micro_batch=b, report=best[1], evaluated=evaluated, min_sum=min_sum)


def enumerate_joint(scenario, limit=None, allow_node_reuse=None, strict_ti=None):
    """
    Best ``(plan, b)`` over every micro-batch. Equal ``L_t`` goes to the
    smaller ``b`` before ``T_i`` and the plan order are compared.
    """
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    if strict_ti is None:
        strict_ti = get_setting('STRICT_TI')
    _check_limit(option_count(scenario, allow_node_reuse) * scenario.minibatch, limit)

    plans = list(iter_plans(scenario, allow_node_reuse))
    best = None
    best_key = None
    evaluated = 0
    min_sum = math.inf
    for b in range(1, scenario.minibatch + 1):
        found, key, count, smallest = _best_at(scenario, plans, b, allow_node_reuse, strict_ti=strict_ti)
        evaluated += count
        min_sum = min(min_sum, smallest)
        if found is None:
            continue
        key = (key[0], b) + key[1:]
        if best_key is None or key < best_key:
            best, best_key = (found[0], b, found[1]), key
    if best is None:
        raise InfeasibleError('no_feasible_plan', 'No plan is feasible at any micro-batch.')
    logger.info('Joint oracle: {} evaluations, L_t={:.6g}s at b={}.'.format(evaluated, best[2].L_t, best[1]))
    return OracleResult(plan=best[0], micro_batch=best[1], report=best[2], evaluated=evaluated, min_sum=min_sum)
