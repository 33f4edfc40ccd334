# -*- coding: utf-8 -*-
"""
Latency and memory model of pipelined split training.

Every solver, the simulator and the oracles are checked against the
functions in this module. Edge costs of the assignment graph are built
from the same helpers (``client_cost``, ``boundary_cost``,
``terminal_cost``) in the same order, so a path sum reproduces
``evaluate().T_f`` bit for bit.
"""
import logging
import math
import numbers
from collections import namedtuple
from functools import lru_cache

from .conf import get_setting
from .exceptions import InfeasibleError
from .helpers import ceil_div, micro_batch_factor
from .models import Violation
from .scenario import effective_rate_matrix
from .validators import plan_violations

logger = logging.getLogger(__name__)


Tables = namedtuple(
    'Tables',
    field_names=['nodes', 'order', 'clients', 'servers', 'rates',
                 'fp_cum', 'bp_cum', 'mem_cum', 'act', 'grad'],
)


@lru_cache(maxsize=64)
def scenario_tables(scenario):
    """Index-friendly views of a scenario, prefixed with a zero layer."""
    layers = scenario.layers
    return Tables(
        nodes={node.id: node for node in scenario.nodes},
        order={node.id: position for position, node in enumerate(scenario.nodes)},
        clients=scenario.clients,
        servers=scenario.servers,
        rates=effective_rate_matrix(scenario),
        fp_cum=(0.0,) + tuple(layer.fp_work_cum for layer in layers),
        bp_cum=(0.0,) + tuple(layer.bp_work_cum for layer in layers),
        mem_cum=(0.0,) + tuple(layer.memory_cum for layer in layers),
        act=(0.0,) + tuple(layer.act_size for layer in layers),
        grad=(0.0,) + tuple(layer.grad_size for layer in layers),
    )


BaseStageTimes = namedtuple(
    'StageTimes',
    field_names=[
        'client_fp_plus_uplink',
        'client_bp_plus_downlink',
        'server_fp',
        'server_bp',
        'link_fp',
        'link_bp',
        'client_fp',
        'client_bp',
    ]
)


class StageTimes(BaseStageTimes):
    """
    ``server_fp[j]``/``server_bp[j]`` belong to submodel ``j + 2``;
    ``link_fp[j]``/``link_bp[j]`` to the boundary between submodels
    ``j + 2`` and ``j + 3``. ``client_fp``/``client_bp`` hold the
    per-client composite stages whose maxima are the first two fields.
    """
    __slots__ = ()

    @property
    def effective_count(self):
        return len(self.server_fp) + 1

    def candidates(self, strict_ti=False):
        yield self.client_fp_plus_uplink
        yield self.client_bp_plus_downlink
        last = len(self.server_fp) - 1
        for j, (fp, bp) in enumerate(zip(self.server_fp, self.server_bp)):
            if strict_ti and j == last:
                continue
            yield fp
            yield bp
        for fp, bp in zip(self.link_fp, self.link_bp):
            yield fp
            yield bp

    def chain(self):
        """
        Stages in traversal order as ``(kind, k, seconds)``: client FP and
        uplink, then servers and links forward, then the backward pass in
        reverse, ending with downlink and client BP.
        """
        count = self.effective_count
        stages = [('client_fp_tx', 1, self.client_fp_plus_uplink)]
        for k in range(2, count + 1):
            stages.append(('server_fp', k, self.server_fp[k - 2]))
            if k < count:
                stages.append(('link_fp', k, self.link_fp[k - 2]))
        for k in range(count, 1, -1):
            stages.append(('server_bp', k, self.server_bp[k - 2]))
            if k > 2:
                stages.append(('link_bp', k - 1, self.link_bp[k - 3]))
        stages.append(('client_bp_rx', 1, self.client_bp_plus_downlink))
        return stages


LatencyReport = namedtuple(
    'LatencyReport',
    field_names=['T_f', 'T_i', 'L_t', 'micro_batch', 'num_micro_batches', 'stages'],
)


def shard_sizes(b, num_clients):
    """
    Splits a micro-batch over the clients; the last client takes the
    remainder.

    >>> shard_sizes(10, 3)
    (3, 3, 4)
    """
    share = b // num_clients
    return (share,) * (num_clients - 1) + (b - (num_clients - 1) * share,)


def compute_time(batch, intensity, work, compute, init):
    return batch * intensity * work / compute + init


def backward_time(batch, threshold, intensity, work, compute, init):
    if batch <= threshold:
        return init
    return (batch - threshold) * intensity * work / compute + init


def transfer_time(batch, size, delay):
    bits = batch * size
    if bits == 0:
        return 0.0
    return bits * delay


def client_cost(fp_uplink, bp_downlink):
    return fp_uplink + bp_downlink


def boundary_cost(link_fp, link_bp, server_fp, server_bp):
    return link_fp + link_bp + server_fp + server_bp


def terminal_cost(server_fp, server_bp):
    return server_fp + server_bp


def _server_work(tables, cuts, k, num_layers):
    bounds = (0,) + cuts + (num_layers,)
    first, last = bounds[k - 1], bounds[k]
    return tables.fp_cum[last] - tables.fp_cum[first], tables.bp_cum[last] - tables.bp_cum[first]


def _check_host(plan, k, node):
    if k < 1 or k > plan.effective_count:
        raise ValueError('Plan has no submodel {}.'.format(k))
    if k == 1:
        if not node.is_client:
            raise ValueError('Submodel 1 runs on clients, not on {}.'.format(node.id))
    elif plan.host(k) != node.id:
        raise ValueError('Node {} does not host submodel {}.'.format(node.id, k))


def _client_batch(scenario, node, b):
    clients = scenario_tables(scenario).clients
    shards = shard_sizes(b, len(clients))
    return shards[[client.id for client in clients].index(node.id)]


def fp_latency(scenario, k, node, plan, b):
    """Forward compute seconds of submodel ``k`` on ``node``."""
    _check_host(plan, k, node)
    tables = scenario_tables(scenario)
    if k == 1:
        batch = _client_batch(scenario, node, b)
        return compute_time(batch, node.intensity, tables.fp_cum[plan.cuts[0]], node.compute, node.init_fp)
    fp_work, _ = _server_work(tables, plan.cuts, k, scenario.num_layers)
    return compute_time(b, node.intensity, fp_work, node.compute, node.init_fp)


def bp_latency(scenario, k, node, plan, b):
    """Backward compute seconds of submodel ``k`` on ``node``; flat up to the threshold."""
    _check_host(plan, k, node)
    tables = scenario_tables(scenario)
    if k == 1:
        batch = _client_batch(scenario, node, b)
        return backward_time(batch, node.bp_threshold, node.intensity, tables.bp_cum[plan.cuts[0]],
                             node.compute, node.init_bp)
    _, bp_work = _server_work(tables, plan.cuts, k, scenario.num_layers)
    return backward_time(b, node.bp_threshold, node.intensity, bp_work, node.compute, node.init_bp)


def _boundary_check(plan, k):
    if not 1 <= k < plan.effective_count:
        raise ValueError('Submodel {} has no outbound boundary.'.format(k))


def activation_bits(scenario, k, plan, b):
    """
    Bits leaving submodel ``k``. For ``k == 1`` a tuple with one entry per
    client shard is returned.
    """
    _boundary_check(plan, k)
    tables = scenario_tables(scenario)
    size = tables.act[plan.cuts[k - 1]]
    if k == 1:
        return tuple(shard * size for shard in shard_sizes(b, len(tables.clients)))
    return b * size


def gradient_bits(scenario, k, plan, b):
    """Bits of activation gradients returned to submodel ``k``."""
    _boundary_check(plan, k)
    tables = scenario_tables(scenario)
    size = tables.grad[plan.cuts[k - 1] + 1]
    if k == 1:
        return tuple(shard * size for shard in shard_sizes(b, len(tables.clients)))
    return b * size


def comm_latency(scenario, k, plan, b, rates=None, direction='fp'):
    """
    Seconds to move activations (``fp``) or gradients (``bp``) across the
    boundary after submodel ``k``. For ``k == 1`` returns
    ``(per_client, slowest)``.
    """
    _boundary_check(plan, k)
    tables = scenario_tables(scenario)
    rates = tables.rates if rates is None else rates
    cut = plan.cuts[k - 1]
    if direction == 'fp':
        size = tables.act[cut]
    elif direction == 'bp':
        size = tables.grad[cut + 1]
    else:
        raise ValueError('Unknown direction "{}".'.format(direction))

    head = plan.host(k + 1)
    if k == 1:
        times = []
        for shard, client in zip(shard_sizes(b, len(tables.clients)), tables.clients):
            pair = (client.id, head) if direction == 'fp' else (head, client.id)
            times.append(transfer_time(shard, size, rates[pair]))
        return tuple(times), max(times)
    tail = plan.host(k)
    pair = (tail, head) if direction == 'fp' else (head, tail)
    return transfer_time(b, size, rates[pair])


def memory_bits(scenario, k, plan, b):
    """
    Memory needed by submodel ``k``; parameter and optimizer state scale
    with the batch. For ``k == 1`` a per-client tuple is returned.
    """
    tables = scenario_tables(scenario)
    if k == 1:
        demand = tables.mem_cum[plan.cuts[0]]
        return tuple(shard * demand for shard in shard_sizes(b, len(tables.clients)))
    first, last = plan.layer_range(k, scenario.num_layers)
    return b * (tables.mem_cum[last] - tables.mem_cum[first - 1])


def check_feasibility(scenario, plan, b, allow_node_reuse=None):
    """
    Returns the list of violated constraints; an empty list means feasible.
    """
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    violations = []
    if not isinstance(b, numbers.Integral) or not 1 <= b <= scenario.minibatch:
        violations.append(Violation(
            'micro_batch_range', 'Micro-batch {} outside [1, {}].'.format(b, scenario.minibatch),
        ))
    violations.extend(plan_violations(scenario, plan, allow_node_reuse=allow_node_reuse))
    if violations:
        return violations

    tables = scenario_tables(scenario)
    for shard, client in zip(memory_bits(scenario, 1, plan, b), tables.clients):
        if shard > client.memory:
            violations.append(Violation(
                'memory_client', 'Client {} needs {:.4g} bits, has {:.4g}.'.format(client.id, shard, client.memory),
            ))

    demand = {}
    for k in range(2, plan.effective_count + 1):
        host = plan.host(k)
        demand[host] = demand.get(host, 0.0) + memory_bits(scenario, k, plan, b)
    for host, bits in sorted(demand.items()):
        capacity = tables.nodes[host].memory
        if bits > capacity:
            violations.append(Violation(
                'memory_server', 'Server {} needs {:.4g} bits, has {:.4g}.'.format(host, bits, capacity),
            ))

    head = plan.host(2)
    hops = [(client.id, head) for client in tables.clients] + [(head, client.id) for client in tables.clients]
    hops += [(a, b_) for a, b_ in zip(plan.placement, plan.placement[1:])]
    hops += [(b_, a) for a, b_ in zip(plan.placement, plan.placement[1:])]
    for pair in hops:
        if math.isinf(tables.rates[pair]):
            violations.append(Violation('unreachable_pair', 'No route from {} to {}.'.format(*pair)))
    return violations


def client_stages(tables, cut, head, b):
    """Per-client composite FP+uplink and BP+downlink seconds."""
    forward = []
    backward = []
    act = tables.act[cut]
    grad = tables.grad[cut + 1]
    for shard, client in zip(shard_sizes(b, len(tables.clients)), tables.clients):
        fp = compute_time(shard, client.intensity, tables.fp_cum[cut], client.compute, client.init_fp)
        bp = backward_time(shard, client.bp_threshold, client.intensity, tables.bp_cum[cut],
                           client.compute, client.init_bp)
        forward.append(fp + transfer_time(shard, act, tables.rates[(client.id, head)]))
        backward.append(bp + transfer_time(shard, grad, tables.rates[(head, client.id)]))
    return tuple(forward), tuple(backward)


def server_stages(tables, node, first, last, b):
    """FP and BP seconds of layers ``first..last`` on ``node``."""
    fp_work = tables.fp_cum[last] - tables.fp_cum[first - 1]
    bp_work = tables.bp_cum[last] - tables.bp_cum[first - 1]
    fp = compute_time(b, node.intensity, fp_work, node.compute, node.init_fp)
    bp = backward_time(b, node.bp_threshold, node.intensity, bp_work, node.compute, node.init_bp)
    return fp, bp


def link_stages(tables, cut, tail, head, b):
    fp = transfer_time(b, tables.act[cut], tables.rates[(tail, head)])
    bp = transfer_time(b, tables.grad[cut + 1], tables.rates[(head, tail)])
    return fp, bp


def stage_times(scenario, plan, b):
    tables = scenario_tables(scenario)
    num_layers = scenario.num_layers
    client_fp, client_bp = client_stages(tables, plan.cuts[0], plan.host(2), b)

    server_fp, server_bp, link_fp, link_bp = [], [], [], []
    for k in range(2, plan.effective_count + 1):
        first, last = plan.layer_range(k, num_layers)
        fp, bp = server_stages(tables, tables.nodes[plan.host(k)], first, last, b)
        server_fp.append(fp)
        server_bp.append(bp)
        if k < plan.effective_count:
            fp, bp = link_stages(tables, last, plan.host(k), plan.host(k + 1), b)
            link_fp.append(fp)
            link_bp.append(bp)

    return StageTimes(
        client_fp_plus_uplink=max(client_fp),
        client_bp_plus_downlink=max(client_bp),
        server_fp=tuple(server_fp),
        server_bp=tuple(server_bp),
        link_fp=tuple(link_fp),
        link_bp=tuple(link_bp),
        client_fp=client_fp,
        client_bp=client_bp,
    )


def first_batch_latency(stages):
    """Sum over every stage, accumulated in path order."""
    total = 0.0
    total = total + client_cost(stages.client_fp_plus_uplink, stages.client_bp_plus_downlink)
    for j in range(len(stages.link_fp)):
        total = total + boundary_cost(stages.link_fp[j], stages.link_bp[j], stages.server_fp[j], stages.server_bp[j])
    total = total + terminal_cost(stages.server_fp[-1], stages.server_bp[-1])
    return total


def report_from_stages(scenario, stages, b, strict_ti=False):
    T_f = first_batch_latency(stages)
    T_i = max(stages.candidates(strict_ti=strict_ti))
    return LatencyReport(
        T_f=T_f,
        T_i=T_i,
        L_t=T_f + micro_batch_factor(scenario.minibatch, b) * T_i,
        micro_batch=b,
        num_micro_batches=ceil_div(scenario.minibatch, b),
        stages=stages,
    )


def evaluate(scenario, plan, b, strict_ti=None, check=True):
    """
    Latency report of a feasible ``(plan, b)``. Raises InfeasibleError
    naming the first violated constraint otherwise.
    """
    if strict_ti is None:
        strict_ti = get_setting('STRICT_TI')
    if check:
        violations = check_feasibility(scenario, plan, b, allow_node_reuse=True)
        if violations:
            raise InfeasibleError(violations[0].code, violations[0].message)
    return report_from_stages(scenario, stage_times(scenario, plan, b), b, strict_ti=strict_ti)
