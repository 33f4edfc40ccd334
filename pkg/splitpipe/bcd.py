# -*- coding: utf-8 -*-
"""
Alternating optimisation of the plan (at a fixed micro-batch) and of the
micro-batch (at a fixed plan and stage cap).
"""
import logging
import time
from collections import namedtuple

from .conf import get_setting
from .costmodel import evaluate
from .microbatch import optimal_microbatch
from .mspgraph import solve_msp

logger = logging.getLogger(__name__)


BcdIteration = namedtuple(
    'BcdIteration',
    field_names=['index', 'plan', 'micro_batch', 'T_1', 'next_micro_batch', 'L_t', 'wall_time'],
)

BcdTrace = namedtuple('BcdTrace', field_names=['iterations', 'converged', 'final', 'micro_batch'])


def solve_joint(scenario, tolerance=None, b0=None, max_iterations=None, lower_bound_provider=None,
                allow_node_reuse=None, vertex_filter=None, strict_ti=None):
    """
    Runs until two consecutive iterations differ by less than ``tolerance``
    seconds or ``max_iterations`` is reached. Each iteration solves the plan
    at the current micro-batch, takes its ``T_i`` as the stage cap and picks
    the best micro-batch under that cap.
    """
    if tolerance is None:
        tolerance = get_setting('BCD_TOLERANCE')
    if b0 is None:
        b0 = get_setting('INITIAL_MICRO_BATCH')
    if max_iterations is None:
        max_iterations = get_setting('BCD_MAX_ITERATIONS')
    if strict_ti is None:
        strict_ti = get_setting('STRICT_TI')

    b = max(1, min(int(b0), scenario.minibatch))
    iterations = []
    final = None
    converged = False
    previous = None

    for index in range(1, max_iterations + 1):
        started = time.perf_counter()
        msp = solve_msp(scenario, b, lower_bound_provider=lower_bound_provider, allow_node_reuse=allow_node_reuse,
                        vertex_filter=vertex_filter, strict_ti=strict_ti)
        T_1 = msp.report.T_i
        micro = optimal_microbatch(scenario, msp.plan, T_1, strict_ti=strict_ti)
        report = evaluate(scenario, msp.plan, micro.b_star, strict_ti=strict_ti, check=False)
        iterations.append(BcdIteration(
            index=index,
            plan=msp.plan,
            micro_batch=b,
            T_1=T_1,
            next_micro_batch=micro.b_star,
            L_t=report.L_t,
            wall_time=time.perf_counter() - started,
        ))
        final = msp._replace(report=report)
        logger.debug('Iteration {}: b {} -> {}, L_t={:.6g}s.'.format(index, b, micro.b_star, report.L_t))

        if previous is not None and abs(previous - report.L_t) < tolerance:
            converged = True
            break
        previous = report.L_t
        b = micro.b_star

    logger.info('Alternating optimisation {} after {} iterations: L_t={:.6g}s at b={}.'.format(
        'converged' if converged else 'stopped', len(iterations), final.report.L_t, final.report.micro_batch,
    ))
    return BcdTrace(
        iterations=tuple(iterations),
        converged=converged,
        final=final,
        micro_batch=final.report.micro_batch,
    )
