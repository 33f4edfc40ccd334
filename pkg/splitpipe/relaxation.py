# -*- coding: utf-8 -*-
"""
Lower bounds on the minimum first-micro-batch latency, used to prune the
bottleneck levels of the splitting/placement search.

``combinatorial_bound`` is the unconstrained shortest path of the
assignment graph. ``build_rlt_lp`` linearises the path objective over
continuous assignment variables:

* ``u[i]``           submodel 1 ends at layer ``i``
* ``s[k,n,i]``       submodel ``k`` runs on server ``n`` and starts after layer ``i``
* ``e[k,n,i]``       submodel ``k`` runs on server ``n`` and ends at layer ``i``
* ``z[k,n,m,i]``     submodel ``k`` on ``n`` ends at ``i`` and ``k + 1`` starts on ``m``

Products of assignments are replaced by the ``z`` variables together with
marginal consistency rows (outgoing and incoming ``z`` sums), so every
integral plan maps to a feasible point whose value is its ``T_f``.
"""
import abc
import heapq
import logging
import math
from itertools import count

import numpy as np

from .conf import get_setting
from .costmodel import client_stages, link_stages, scenario_tables, shard_sizes
from .mspgraph import LowerBound
from .simplex import EQ, GE, LE, LinearProgram, OPTIMAL, simplex_solve

logger = logging.getLogger(__name__)


def combinatorial_bound(graph):
    """Shortest source-to-sink sum ignoring memory, reuse and bottleneck caps."""
    distance = {graph.source: 0.0}
    counter = count()
    heap = [(0.0, next(counter), graph.source)]
    done = set()
    while heap:
        cost, _, vertex = heapq.heappop(heap)
        if vertex in done:
            continue
        done.add(vertex)
        if vertex == graph.sink:
            return LowerBound(value=cost, provider='combinatorial', certificate=None)
        for edge in graph.out_edges(vertex):
            candidate = cost + edge.cost
            if candidate < distance.get(edge.head, math.inf):
                distance[edge.head] = candidate
                heapq.heappush(heap, (candidate, next(counter), edge.head))
    return LowerBound(value=math.inf, provider='combinatorial', certificate=None)


class _Builder(object):

    def __init__(self):
        self.columns = {}
        self.costs = []
        self.rows = []

    def column(self, name, cost=0.0):
        self.columns[name] = len(self.costs)
        self.costs.append(cost)

    def add_cost(self, name, cost):
        self.costs[self.columns[name]] += cost

    def row(self, name, terms, sense, rhs):
        """Terms naming absent columns are dropped; those columns are fixed at zero."""
        coefficients = {}
        for column, coefficient in terms:
            if column in self.columns:
                index = self.columns[column]
                coefficients[index] = coefficients.get(index, 0.0) + coefficient
        self.rows.append((name, coefficients, sense, rhs))

    def program(self):
        width = len(self.costs)
        matrix = np.zeros((len(self.rows), width))
        for index, (_, coefficients, _, _) in enumerate(self.rows):
            for column, coefficient in coefficients.items():
                matrix[index, column] = coefficient
        names = [None] * width
        for name, index in self.columns.items():
            names[index] = name
        return LinearProgram(
            objective=np.array(self.costs),
            matrix=matrix,
            senses=tuple(row[2] for row in self.rows),
            rhs=np.array([row[3] for row in self.rows], dtype=float),
            upper=np.ones(width),
            constant=0.0,
            columns=tuple(names),
            row_names=tuple(row[0] for row in self.rows),
            upper_bounds_implied=True,
        )


def _u(i):
    return 'u[{}]'.format(i)


def _s(k, node, i):
    return 's[{},{},{}]'.format(k, node, i)


def _e(k, node, i):
    return 'e[{},{},{}]'.format(k, node, i)


def _z(k, node, head, i):
    return 'z[{},{},{},{}]'.format(k, node, head, i)


def _server_coefficients(tables, node, b):
    """
    Per-layer cost of ending and of starting after a layer on ``node``;
    the backward term is active only when ``b`` exceeds the node threshold.
    """
    scale = b * node.intensity / node.compute
    backward = (b - node.bp_threshold) * node.intensity / node.compute if b > node.bp_threshold else 0.0

    def ending(i):
        return scale * tables.fp_cum[i] + backward * tables.bp_cum[i] + node.init_fp + node.init_bp

    def starting(i):
        return -(scale * tables.fp_cum[i] + backward * tables.bp_cum[i])

    return ending, starting


def build_rlt_lp(scenario, b, allow_node_reuse=None):
    """Linear relaxation of the splitting/placement problem at micro-batch ``b``."""
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    tables = scenario_tables(scenario)
    num_layers = scenario.num_layers
    last_k = scenario.max_submodels
    servers = [server.id for server in tables.servers]
    builder = _Builder()

    for i in range(1, num_layers):
        builder.column(_u(i))
    for k in range(2, last_k + 1):
        for node in servers:
            ending, starting = _server_coefficients(tables, tables.nodes[node], b)
            for i in range(k - 1, num_layers):
                if k == 2:
                    fp_up, bp_down = (max(times) for times in client_stages(tables, i, node, b))
                    cost = fp_up + bp_down
                    if math.isinf(cost):
                        continue
                    builder.column(_s(k, node, i), cost + starting(i))
                else:
                    builder.column(_s(k, node, i), starting(i))
            ends = (num_layers,) if k == last_k else range(k, num_layers + 1)
            for i in ends:
                builder.column(_e(k, node, i), ending(i))
    for k in range(2, last_k):
        for node in servers:
            for head in servers:
                if head == node:
                    continue
                for i in range(k, num_layers):
                    link_fp, link_bp = link_stages(tables, i, node, head, b)
                    if math.isinf(link_fp + link_bp):
                        continue
                    builder.column(_z(k, node, head, i), link_fp + link_bp)

    builder.row('first_cut', [(_u(i), 1.0) for i in range(1, num_layers)], EQ, 1.0)
    for i in range(1, num_layers):
        builder.row('client_link[{}]'.format(i),
                    [(_s(2, node, i), 1.0) for node in servers] + [(_u(i), -1.0)], EQ, 0.0)

    for k in range(2, last_k + 1):
        for node in servers:
            starts = range(k - 1, num_layers)
            ends = (num_layers,) if k == last_k else range(k, num_layers + 1)
            builder.row('balance[{},{}]'.format(k, node),
                        [(_s(k, node, i), 1.0) for i in starts] + [(_e(k, node, i), -1.0) for i in ends],
                        EQ, 0.0)
            for last in range(k, num_layers):
                builder.row('order[{},{},{}]'.format(k, node, last),
                            [(_e(k, node, i), 1.0) for i in range(k, last + 1)]
                            + [(_s(k, node, i), -1.0) for i in range(k - 1, last)],
                            LE, 0.0)

    for k in range(2, last_k):
        for node in servers:
            for i in range(k, num_layers):
                builder.row('outgoing[{},{},{}]'.format(k, node, i),
                            [(_z(k, node, head, i), 1.0) for head in servers if head != node]
                            + [(_e(k, node, i), -1.0)], EQ, 0.0)
                builder.row('incoming[{},{},{}]'.format(k + 1, node, i),
                            [(_z(k, tail, node, i), 1.0) for tail in servers if tail != node]
                            + [(_s(k + 1, node, i), -1.0)], EQ, 0.0)

    builder.row('last_layer',
                [(_e(k, node, num_layers), 1.0) for k in range(2, last_k + 1) for node in servers], EQ, 1.0)

    shards = shard_sizes(b, len(tables.clients))
    for shard, client in zip(shards, tables.clients):
        builder.row('memory[{}]'.format(client.id),
                    [(_u(i), shard * tables.mem_cum[i]) for i in range(1, num_layers)], LE, client.memory)
    for node in servers:
        terms = []
        for k in range(2, last_k + 1):
            ends = (num_layers,) if k == last_k else range(k, num_layers + 1)
            terms += [(_e(k, node, i), b * tables.mem_cum[i]) for i in ends]
            terms += [(_s(k, node, i), -b * tables.mem_cum[i]) for i in range(k - 1, num_layers)]
        builder.row('memory[{}]'.format(node), terms, LE, tables.nodes[node].memory)
        if not allow_node_reuse:
            terms = []
            for k in range(2, last_k + 1):
                ends = (num_layers,) if k == last_k else range(k, num_layers + 1)
                terms += [(_e(k, node, i), 1.0) for i in ends]
            builder.row('single_use[{}]'.format(node), terms, LE, 1.0)

    lp = builder.program()
    logger.debug('Relaxation at b={}: {} columns, {} rows.'.format(b, lp.shape[1], lp.shape[0]))
    return lp


def plan_vector(lp, plan, num_layers):
    """The integral point of ``lp`` that encodes ``plan``."""
    index = {name: position for position, name in enumerate(lp.columns)}
    x = np.zeros(len(lp.columns))
    x[index[_u(plan.cuts[0])]] = 1.0
    for k in range(2, plan.effective_count + 1):
        first, last = plan.layer_range(k, num_layers)
        node = plan.host(k)
        x[index[_s(k, node, first - 1)]] = 1.0
        x[index[_e(k, node, last)]] = 1.0
        if k < plan.effective_count:
            x[index[_z(k, node, plan.host(k + 1), last)]] = 1.0
    return x


def rlt_bound(scenario, b, allow_node_reuse=None):
    lp = build_rlt_lp(scenario, b, allow_node_reuse=allow_node_reuse)
    result = simplex_solve(lp)
    if result.status != OPTIMAL:
        logger.info('Relaxation at b={} is {}.'.format(b, result.status))
        return LowerBound(value=math.inf, provider='rlt', certificate=result)
    return LowerBound(value=result.value, provider='rlt', certificate=result)


class BaseBoundProvider(metaclass=abc.ABCMeta):

    @abc.abstractproperty
    def verbose_name(self):
        pass  # pragma: no cover

    @abc.abstractmethod
    def bound(self, graph, allow_node_reuse=None):
        pass  # pragma: no cover


class CombinatorialBoundProvider(BaseBoundProvider):
    verbose_name = 'Shortest path without constraints'

    def bound(self, graph, allow_node_reuse=None):
        return combinatorial_bound(graph)


class RltBoundProvider(BaseBoundProvider):
    verbose_name = 'Linear relaxation and shortest path'

    def bound(self, graph, allow_node_reuse=None):
        fast = combinatorial_bound(graph)
        relaxed = rlt_bound(graph.scenario, graph.micro_batch, allow_node_reuse=allow_node_reuse)
        if relaxed.value > fast.value:
            return relaxed
        return LowerBound(value=fast.value, provider='combinatorial', certificate=relaxed.certificate)
