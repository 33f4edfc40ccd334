# -*- coding: utf-8 -*-
"""
Optimal micro-batch size for a fixed plan and a fixed stage cap ``T_1``.

A micro-batch ``b`` is admissible when the plan fits in memory at ``b``
and every pipeline stage takes at most ``T_1``. The objective is
``T_f(b) + ceil((B - b) / b) * T_1``.
"""
import logging
import math
from collections import namedtuple

from .conf import get_setting
from .costmodel import check_feasibility, evaluate, scenario_tables, shard_sizes
from .exceptions import InfeasibleError
from .helpers import factor_plateaus, micro_batch_factor

logger = logging.getLogger(__name__)

BOTH_BELOW = 'both_below'
BOTH_ABOVE = 'both_above'
CLIENT_BELOW = 'client_below'
SERVER_BELOW = 'server_below'
CASES = (BOTH_BELOW, BOTH_ABOVE, CLIENT_BELOW, SERVER_BELOW)


MicrobatchSolution = namedtuple(
    'MicrobatchSolution',
    field_names=['b_star', 'case', 'b_tilde', 'b_v', 'objective', 'theorem_b'],
)


def _client_above(case):
    return case in (BOTH_ABOVE, SERVER_BELOW)


def _server_above(case):
    return case in (BOTH_ABOVE, CLIENT_BELOW)


def case_for(scenario, plan, b):
    """Backward-pass regime of clients and servers at micro-batch ``b``."""
    tables = scenario_tables(scenario)
    shards = shard_sizes(b, len(tables.clients))
    client_above = any(shard > client.bp_threshold for shard, client in zip(shards, tables.clients))
    server_above = any(b > tables.nodes[host].bp_threshold for host in plan.placement)
    if client_above and server_above:
        return BOTH_ABOVE
    if server_above:
        return CLIENT_BELOW
    if client_above:
        return SERVER_BELOW
    return BOTH_BELOW


def _submodel_work(tables, plan, k, num_layers):
    first, last = plan.layer_range(k, num_layers)
    return tables.fp_cum[last] - tables.fp_cum[first - 1], tables.bp_cum[last] - tables.bp_cum[first - 1]


def _client_terms(tables, plan):
    """Per-client (fp per sample, bp per sample, uplink per sample, downlink per sample)."""
    cut = plan.cuts[0]
    head = plan.host(2)
    terms = []
    for client in tables.clients:
        scale = client.intensity / client.compute
        terms.append((
            scale * tables.fp_cum[cut],
            scale * tables.bp_cum[cut],
            tables.act[cut] * tables.rates[(client.id, head)],
            tables.grad[cut + 1] * tables.rates[(head, client.id)],
        ))
    return terms


def slope_of_Tf(scenario, plan, case):
    """
    Seconds per sample added to ``T_f`` inside the ``case`` region. Client
    shards are taken as ``b / M``, which is exact for a single client.
    """
    tables = scenario_tables(scenario)
    num_layers = scenario.num_layers
    clients = len(tables.clients)

    forward = max(fp + uplink for fp, _, uplink, _ in _client_terms(tables, plan))
    if _client_above(case):
        backward = max(bp + downlink for _, bp, _, downlink in _client_terms(tables, plan))
    else:
        backward = max(downlink for _, _, _, downlink in _client_terms(tables, plan))
    slope = (forward + backward) / clients

    for k in range(2, plan.effective_count + 1):
        node = tables.nodes[plan.host(k)]
        fp_work, bp_work = _submodel_work(tables, plan, k, num_layers)
        slope += node.intensity * fp_work / node.compute
        if _server_above(case):
            slope += node.intensity * bp_work / node.compute
        if k < plan.effective_count:
            _, last = plan.layer_range(k, num_layers)
            head = plan.host(k + 1)
            slope += tables.act[last] * tables.rates[(node.id, head)]
            slope += tables.grad[last + 1] * tables.rates[(head, node.id)]
    return slope


def intercept_of_Tf(scenario, plan, case):
    """Constant part of ``T_f`` inside the ``case`` region for a single client."""
    tables = scenario_tables(scenario)
    client = tables.clients[0]
    cut = plan.cuts[0]
    total = client.init_fp + client.init_bp
    if _client_above(case):
        total -= client.bp_threshold * client.intensity * tables.bp_cum[cut] / client.compute
    for k in range(2, plan.effective_count + 1):
        node = tables.nodes[plan.host(k)]
        _, bp_work = _submodel_work(tables, plan, k, scenario.num_layers)
        total += node.init_fp + node.init_bp
        if _server_above(case):
            total -= node.bp_threshold * node.intensity * bp_work / node.compute
    return total


def _cap(budget, per_sample, offset=0.0):
    """Largest integer ``b`` with ``(b - offset) * per_sample <= budget``."""
    if budget < 0:
        return 0
    if per_sample <= 0:
        return math.inf
    return math.floor(budget / per_sample + offset)


def boundary_bv(scenario, plan, T_1, case, strict_ti=False):
    """
    Largest micro-batch the memory limits and the stage caps admit in the
    ``case`` region (client shards relaxed to ``b / M``). Zero when ``T_1``
    is below a fixed initialisation term. With ``strict_ti`` the last
    submodel's compute is left uncapped.
    """
    tables = scenario_tables(scenario)
    num_layers = scenario.num_layers
    clients = len(tables.clients)
    caps = [scenario.minibatch]

    cut = plan.cuts[0]
    for client, (fp, bp, uplink, downlink) in zip(tables.clients, _client_terms(tables, plan)):
        if tables.mem_cum[cut] > 0:
            caps.append(clients * math.floor(client.memory / tables.mem_cum[cut]))
        caps.append(clients * _cap(T_1 - client.init_fp, fp + uplink))
        if _client_above(case):
            caps.append(clients * _cap(T_1 - client.init_bp + client.bp_threshold * bp, bp + downlink))
        else:
            caps.append(clients * _cap(T_1 - client.init_bp, downlink))

    demand = {}
    for k in range(2, plan.effective_count + 1):
        node = tables.nodes[plan.host(k)]
        first, last = plan.layer_range(k, num_layers)
        demand[node.id] = demand.get(node.id, 0.0) + tables.mem_cum[last] - tables.mem_cum[first - 1]
        fp_work, bp_work = _submodel_work(tables, plan, k, num_layers)
        scale = node.intensity / node.compute
        if not (strict_ti and k == plan.effective_count):
            caps.append(_cap(T_1 - node.init_fp, scale * fp_work))
            if _server_above(case):
                caps.append(_cap(T_1 - node.init_bp, scale * bp_work, offset=node.bp_threshold))
            elif T_1 < node.init_bp:
                caps.append(0)
        if k < plan.effective_count:
            head = plan.host(k + 1)
            caps.append(_cap(T_1, tables.act[last] * tables.rates[(node.id, head)]))
            caps.append(_cap(T_1, tables.grad[last + 1] * tables.rates[(head, node.id)]))
    for host, bits in demand.items():
        if bits > 0:
            caps.append(math.floor(tables.nodes[host].memory / bits))
    return max(0, int(min(caps)))


def microbatch_objective(scenario, plan, b, T_1, strict_ti=False):
    report = evaluate(scenario, plan, b, strict_ti=strict_ti, check=False)
    return report.T_f + micro_batch_factor(scenario.minibatch, b) * T_1


def admissible(scenario, plan, b, T_1, strict_ti=False):
    """Fits in memory at ``b`` and no stage counted in ``T_i`` exceeds ``T_1``."""
    if check_feasibility(scenario, plan, b, allow_node_reuse=True):
        return False
    return evaluate(scenario, plan, b, strict_ti=strict_ti, check=False).T_i <= T_1


def _argmin(scenario, plan, T_1, candidates, strict_ti=False):
    best = None
    best_value = math.inf
    for b in sorted(set(candidates)):
        if not 1 <= b <= scenario.minibatch or not admissible(scenario, plan, b, T_1, strict_ti=strict_ti):
            continue
        value = microbatch_objective(scenario, plan, b, T_1, strict_ti=strict_ti)
        if value < best_value:
            best, best_value = b, value
    return best, best_value


def exact_candidates(scenario, plan):
    """
    Left ends of the ranges on which both ``ceil((B - b) / b)`` and the
    client shard quotient stay constant. The objective does not decrease
    and admissibility does not improve inside such a range.
    """
    minibatch = scenario.minibatch
    clients = len(scenario_tables(scenario).clients)
    candidates = {1, minibatch}
    candidates.update(first for first, _ in factor_plateaus(minibatch))
    if clients > 1:
        candidates.update(range(clients, minibatch + 1, clients))
    return candidates


def theorem_candidates(scenario, plan, T_1, strict_ti=False):
    """Closed-form selection: floor and ceiling of b_tilde per region, region boundaries, thresholds."""
    tables = scenario_tables(scenario)
    clients = len(tables.clients)
    candidates = {1, scenario.minibatch}
    tildes = {}
    for case in CASES:
        slope = slope_of_Tf(scenario, plan, case)
        b_tilde = math.sqrt(scenario.minibatch * T_1 / slope) if slope > 0 else float(scenario.minibatch)
        tildes[case] = b_tilde
        b_v = boundary_bv(scenario, plan, T_1, case, strict_ti=strict_ti)
        candidates.update((math.floor(b_tilde), math.ceil(b_tilde), b_v, b_v + 1))
    for client in tables.clients:
        candidates.update((client.bp_threshold * clients, client.bp_threshold * clients + 1))
    for host in plan.placement:
        threshold = tables.nodes[host].bp_threshold
        candidates.update((threshold, threshold + 1))
    return {int(b) for b in candidates if 1 <= b <= scenario.minibatch}, tildes


def _solution(scenario, plan, T_1, b_star, objective, theorem_b, tildes=None, strict_ti=False):
    case = case_for(scenario, plan, b_star)
    if tildes is None:
        slope = slope_of_Tf(scenario, plan, case)
        b_tilde = math.sqrt(scenario.minibatch * T_1 / slope) if slope > 0 else float(scenario.minibatch)
    else:
        b_tilde = tildes[case]
    return MicrobatchSolution(
        b_star=b_star,
        case=case,
        b_tilde=b_tilde,
        b_v=boundary_bv(scenario, plan, T_1, case, strict_ti=strict_ti),
        objective=objective,
        theorem_b=theorem_b,
    )


def _resolve_strict(strict_ti):
    return get_setting('STRICT_TI') if strict_ti is None else strict_ti


def optimal_microbatch(scenario, plan, T_1, strict_ti=None):
    """
    Exact minimiser over the range left ends, compared with the closed-form
    selection. A disagreement between the two is logged. ``strict_ti``
    decides which stages ``T_1`` caps and defaults to the STRICT_TI setting.
    """
    strict_ti = _resolve_strict(strict_ti)
    b_star, objective = _argmin(scenario, plan, T_1, exact_candidates(scenario, plan), strict_ti=strict_ti)
    if b_star is None:
        raise InfeasibleError(
            'stage_cap', 'No micro-batch keeps every stage within {:.6g}s and fits in memory.'.format(T_1),
        )

    candidates, tildes = theorem_candidates(scenario, plan, T_1, strict_ti=strict_ti)
    theorem_b, theorem_value = _argmin(scenario, plan, T_1, candidates, strict_ti=strict_ti)
    if theorem_b != b_star:
        logger.info('Closed-form micro-batch {} ({}) differs from exact {} ({:.6g}s).'.format(
            theorem_b, 'inadmissible' if theorem_b is None else '{:.6g}s'.format(theorem_value),
            b_star, objective,
        ))
    return _solution(scenario, plan, T_1, b_star, objective, theorem_b, tildes, strict_ti=strict_ti)


def scan_microbatch(scenario, plan, T_1, strict_ti=None):
    """Objective at every ``b`` in ``[1, B]``; the ground truth for optimal_microbatch."""
    strict_ti = _resolve_strict(strict_ti)
    b_star, objective = _argmin(scenario, plan, T_1, range(1, scenario.minibatch + 1), strict_ti=strict_ti)
    if b_star is None:
        raise InfeasibleError(
            'stage_cap', 'No micro-batch keeps every stage within {:.6g}s and fits in memory.'.format(T_1),
        )
    return _solution(scenario, plan, T_1, b_star, objective, theorem_b=None, strict_ti=strict_ti)
