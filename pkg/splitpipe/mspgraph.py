# -*- coding: utf-8 -*-
"""
Assignment graph of (submodel, node, layer range) vertices and the exact
splitting/placement search at a fixed micro-batch.

Each edge carries two weights: ``cost``, the stage latencies it adds to
the first micro-batch, and ``bottleneck``, the largest single stage among
them. A path sum is ``T_f`` of the induced plan and the path maximum is
its ``T_i``.
"""
import heapq
import logging
import math
import time
from collections import namedtuple
from itertools import count

from .conf import get_setting
from .costmodel import (
    boundary_cost, check_feasibility, client_cost, client_stages, evaluate, link_stages,
    scenario_tables, server_stages, shard_sizes, terminal_cost,
)
from .exceptions import InfeasibleError
from .helpers import micro_batch_factor
from .models import SplitPlan

logger = logging.getLogger(__name__)

CLIENT_POOL = '*'
SOURCE = 'v_s'
SINK = 'v_d'

# Relative slack when comparing a pruning floor with the incumbent.
PRUNE_SLACK = 1e-12


Vertex = namedtuple('Vertex', field_names=['k', 'node', 'first', 'last'])

Edge = namedtuple('Edge', field_names=['tail', 'head', 'cost', 'bottleneck', 'stages'])


BaseAssignmentGraph = namedtuple(
    'AssignmentGraph',
    field_names=[
        'scenario',
        'micro_batch',
        'strict_ti',
        'source',
        'sink',
        'vertices',
        'edges',
        'adjacency',
        'demand',
        'fits',
    ]
)


class AssignmentGraph(BaseAssignmentGraph):
    __slots__ = ()

    def layer(self, k):
        return [vertex for vertex in self.vertices if vertex.k == k]

    def out_edges(self, vertex):
        return self.adjacency.get(vertex, ())

    def vertex_key(self, vertex):
        order = scenario_tables(self.scenario).order
        return vertex.k, order.get(vertex.node, -1), vertex.first, vertex.last


BasePath = namedtuple('Path', field_names=['vertices', 'cost', 'bottleneck'])


class Path(BasePath):
    __slots__ = ()

    @property
    def plan(self):
        inner = [vertex for vertex in self.vertices if vertex.node not in (SOURCE, SINK)]
        return SplitPlan(
            cuts=[vertex.last for vertex in inner[:-1]],
            placement=[vertex.node for vertex in inner[1:]],
        )


LowerBound = namedtuple('LowerBound', field_names=['value', 'provider', 'certificate'])


MspSolution = namedtuple(
    'MspSolution',
    field_names=['plan', 'report', 'subgraphs_searched', 'subgraphs_pruned', 'wall_time', 'bound'],
)


def solution_key(scenario, plan, report):
    """Ordering of equally good solutions: L_t, T_i, fewer submodels, placement, cuts."""
    order = scenario_tables(scenario).order
    return (
        report.L_t,
        report.T_i,
        plan.effective_count,
        tuple(order[node] for node in plan.placement),
        plan.cuts,
    )


def _server_vertices(scenario):
    num_layers = scenario.num_layers
    last_k = scenario.max_submodels
    for k in range(2, last_k + 1):
        for server in scenario_tables(scenario).servers:
            for first in range(k, num_layers + 1):
                lasts = (num_layers,) if k == last_k else range(first, num_layers + 1)
                for last in lasts:
                    yield Vertex(k, server.id, first, last)


def build_graph(scenario, b, strict_ti=None):
    """
    Vertices: ``(1, '*', 1, i)`` for the client pool and ``(k, n, a, i)``
    for server ``n`` running layers ``a..i`` as submodel ``k``, plus the
    virtual source and sink. Edges whose stage time is infinite
    (unreachable node pair) are left out.
    """
    if strict_ti is None:
        strict_ti = get_setting('STRICT_TI')
    tables = scenario_tables(scenario)
    num_layers = scenario.num_layers
    last_k = scenario.max_submodels

    source = Vertex(0, SOURCE, 0, 0)
    sink = Vertex(last_k + 1, SINK, num_layers + 1, num_layers + 1)
    clients = [Vertex(1, CLIENT_POOL, 1, i) for i in range(1, num_layers)]
    servers = list(_server_vertices(scenario))

    demand = {}
    fits = {}
    shards = shard_sizes(b, len(tables.clients))
    for vertex in clients:
        per_client = [shard * tables.mem_cum[vertex.last] for shard in shards]
        demand[vertex] = max(per_client)
        fits[vertex] = all(bits <= client.memory for bits, client in zip(per_client, tables.clients))
    for vertex in servers:
        bits = b * (tables.mem_cum[vertex.last] - tables.mem_cum[vertex.first - 1])
        demand[vertex] = bits
        fits[vertex] = bits <= tables.nodes[vertex.node].memory

    heads = {}
    for vertex in servers:
        heads.setdefault((vertex.k, vertex.first), []).append(vertex)

    compute = {}
    for vertex in servers:
        key = (vertex.node, vertex.first, vertex.last)
        if key not in compute:
            compute[key] = server_stages(tables, tables.nodes[vertex.node], vertex.first, vertex.last, b)

    edges = [Edge(source, vertex, 0.0, 0.0, ()) for vertex in clients]

    client_cache = {}
    for vertex in clients:
        for head in heads.get((2, vertex.last + 1), ()):
            key = (vertex.last, head.node)
            if key not in client_cache:
                forward, backward = client_stages(tables, vertex.last, head.node, b)
                client_cache[key] = max(forward), max(backward)
            fp_up, bp_down = client_cache[key]
            cost = client_cost(fp_up, bp_down)
            if math.isinf(cost):
                continue
            edges.append(Edge(
                vertex, head, cost, max(fp_up, bp_down), (('client_fp_tx', fp_up), ('client_bp_rx', bp_down)),
            ))

    link_cache = {}
    for vertex in servers:
        fp, bp = compute[(vertex.node, vertex.first, vertex.last)]
        if vertex.last == num_layers:
            edges.append(Edge(
                vertex, sink, terminal_cost(fp, bp), 0.0 if strict_ti else max(fp, bp),
                (('server_fp', fp), ('server_bp', bp)),
            ))
            continue
        if vertex.k == last_k:
            continue
        for head in heads.get((vertex.k + 1, vertex.last + 1), ()):
            if head.node == vertex.node:
                continue
            key = (vertex.last, vertex.node, head.node)
            if key not in link_cache:
                link_cache[key] = link_stages(tables, vertex.last, vertex.node, head.node, b)
            link_fp, link_bp = link_cache[key]
            cost = boundary_cost(link_fp, link_bp, fp, bp)
            if math.isinf(cost):
                continue
            edges.append(Edge(
                vertex, head, cost, max(link_fp, link_bp, fp, bp),
                (('link_fp', link_fp), ('link_bp', link_bp), ('server_fp', fp), ('server_bp', bp)),
            ))

    graph = AssignmentGraph(
        scenario=scenario,
        micro_batch=b,
        strict_ti=strict_ti,
        source=source,
        sink=sink,
        vertices=tuple([source] + clients + servers + [sink]),
        edges=tuple(edges),
        adjacency={},
        demand=demand,
        fits=fits,
    )
    for edge in sorted(edges, key=lambda edge: graph.vertex_key(edge.head)):
        graph.adjacency.setdefault(edge.tail, []).append(edge)
    logger.debug('Built graph at b={}: {} vertices, {} edges.'.format(b, len(graph.vertices), len(edges)))
    return graph


def path_weights(path_edges):
    """Sum and bottleneck of a sequence of edges, accumulated in path order."""
    cost = 0.0
    bottleneck = 0.0
    for edge in path_edges:
        cost = cost + edge.cost
        bottleneck = max(bottleneck, edge.bottleneck)
    return cost, bottleneck


class _Label(object):
    __slots__ = ('cost', 'bottleneck', 'vertex', 'used', 'required', 'parent')

    def __init__(self, cost, bottleneck, vertex, used, required, parent):
        self.cost = cost
        self.bottleneck = bottleneck
        self.vertex = vertex
        self.used = used
        self.required = required
        self.parent = parent

    def vertices(self):
        label = self
        vertices = []
        while label is not None:
            vertices.append(label.vertex)
            label = label.parent
        return list(reversed(vertices))

    def dominates(self, other, allow_node_reuse):
        """
        Called on an already settled label, so ``self.cost <= other.cost``.
        """
        if self.required < other.required:
            return False
        if not allow_node_reuse:
            return self.used <= other.used
        spent = dict(other.used)
        return all(bits <= spent.get(node, -1.0) for node, bits in self.used)


def _extend_used(label, head, graph, allow_node_reuse, memory_check):
    if head.k < 2 or head.node == SINK:
        return label.used
    if not allow_node_reuse:
        if head.node in label.used:
            return None
        return label.used | {head.node}
    if not memory_check:
        return label.used
    spent = dict(label.used)
    total = spent.get(head.node, 0.0) + graph.demand[head]
    if total > scenario_tables(graph.scenario).nodes[head.node].memory:
        return None
    spent[head.node] = total
    return tuple(sorted(spent.items()))


def constrained_shortest_path(graph, required_edge=None, bottleneck_cap=math.inf, memory_check=True,
                              allow_node_reuse=None, vertex_filter=None):
    """
    Minimum-sum source-to-sink path using only edges with
    ``bottleneck <= bottleneck_cap`` (and ``required_edge`` when given).

    Label-setting search on a binary heap. Labels carry the servers used so
    far (one submodel per server) or the memory spent per server (reuse
    allowed), so the aggregate memory and reuse constraints are enforced
    during the search. Among equal sums the lexicographically smallest
    vertex sequence wins. Returns a Path or None.
    """
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    required_pair = None if required_edge is None else (required_edge.tail, required_edge.head)
    start_used = () if allow_node_reuse else frozenset()

    settled = {}
    counter = count()
    start = _Label(0.0, 0.0, graph.source, start_used, required_edge is None, None)
    heap = [(0.0, (graph.vertex_key(graph.source),), next(counter), start)]

    while heap:
        _, key, _, label = heapq.heappop(heap)
        vertex = label.vertex
        labels = settled.setdefault(vertex, [])
        if any(other.dominates(label, allow_node_reuse) for other in labels):
            continue
        labels.append(label)

        if vertex == graph.sink:
            if not label.required:
                continue
            path = Path(vertices=tuple(label.vertices()), cost=label.cost, bottleneck=label.bottleneck)
            if memory_check:
                violations = check_feasibility(graph.scenario, path.plan, graph.micro_batch,
                                               allow_node_reuse=allow_node_reuse)
                if violations:
                    logger.warning('Extracted path fails revalidation: {}'.format(violations[0].message))
                    continue
            return path

        for edge in graph.out_edges(vertex):
            if edge.bottleneck > bottleneck_cap:
                continue
            head = edge.head
            if head != graph.sink:
                if memory_check and not graph.fits[head]:
                    continue
                if vertex_filter is not None and not vertex_filter(head):
                    continue
            used = _extend_used(label, head, graph, allow_node_reuse, memory_check)
            if used is None:
                continue
            required = label.required or (edge.tail, edge.head) == required_pair
            cost = label.cost + edge.cost
            child = _Label(cost, max(label.bottleneck, edge.bottleneck), head, used, required, label)
            heapq.heappush(heap, (cost, key + (graph.vertex_key(head),), next(counter), child))
    return None


def _diagnose(graph, allow_node_reuse, vertex_filter):
    """Name the constraint that leaves no path."""
    relaxed = constrained_shortest_path(graph, memory_check=False, allow_node_reuse=allow_node_reuse,
                                        vertex_filter=vertex_filter)
    if relaxed is not None:
        if not any(graph.fits[vertex] for vertex in graph.layer(1)):
            return 'memory_client', 'No client can hold any first submodel at b={}.'.format(graph.micro_batch)
        return 'memory_server', 'Server memory admits no complete placement at b={}.'.format(graph.micro_batch)
    if not allow_node_reuse:
        relaxed = constrained_shortest_path(graph, memory_check=False, allow_node_reuse=True,
                                            vertex_filter=vertex_filter)
        if relaxed is not None:
            return 'node_reuse', 'Too few servers to place the model without reusing one.'
    return 'connectivity', 'No placement connects the clients to a final submodel.'


def resolve_bound_provider(provider):
    from .utils import get_bound_provider

    if provider is None:
        provider = get_setting('DEFAULT_BOUND')
    if isinstance(provider, str):
        return get_bound_provider(provider)
    return provider


def solve_msp(scenario, b, lower_bound_provider=None, allow_node_reuse=None, prune=True, vertex_filter=None,
              strict_ti=None):
    """
    Exact splitting and placement at a fixed micro-batch ``b``.

    Distinct edge bottlenecks are visited in descending order. A level is
    skipped when ``floor + xi * level`` already exceeds the incumbent,
    where the floor is the lower bound or the last searched path sum.
    Otherwise the min-sum path under that cap is scored, and every level
    down to the found path's own bottleneck is dominated by it. At ``b = B``
    lower levels are still searched while the path sum holds, so the
    smallest ``T_i`` among equal ``T_f`` wins.
    """
    started = time.perf_counter()
    if allow_node_reuse is None:
        allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
    if strict_ti is None:
        strict_ti = get_setting('STRICT_TI')

    graph = build_graph(scenario, b, strict_ti=strict_ti)
    factor = micro_batch_factor(scenario.minibatch, b)
    bound = None
    floor = 0.0
    if prune:
        bound = resolve_bound_provider(lower_bound_provider).bound(graph, allow_node_reuse=allow_node_reuse)
        floor = bound.value

    levels = sorted({edge.bottleneck for edge in graph.edges}, reverse=True)
    best = None
    best_key = None
    best_plan = None
    searched = 0
    pruned = 0
    index = 0
    while index < len(levels):
        cap = levels[index]
        if prune and best is not None and floor + factor * cap > best.L_t * (1 + PRUNE_SLACK):
            pruned += 1
            index += 1
            continue

        path = constrained_shortest_path(graph, bottleneck_cap=cap, allow_node_reuse=allow_node_reuse,
                                         vertex_filter=vertex_filter)
        searched += 1
        if path is None:
            break
        floor = max(floor, path.cost)

        plan = path.plan
        report = evaluate(scenario, plan, b, strict_ti=strict_ti, check=False)
        key = solution_key(scenario, plan, report)
        if best_key is None or key < best_key:
            best, best_key = report, key
            best_plan = plan
        if factor == 0 and report.L_t > best.L_t:
            break
        while index < len(levels) and levels[index] >= path.bottleneck:
            index += 1

    if best is None:
        constraint, detail = _diagnose(graph, allow_node_reuse, vertex_filter)
        raise InfeasibleError(constraint, detail)

    wall_time = time.perf_counter() - started
    logger.info('MSP at b={}: L_t={:.6g}s, {} searched, {} pruned of {} levels in {:.3f}s.'.format(
        b, best.L_t, searched, pruned, len(levels), wall_time,
    ))
    return MspSolution(
        plan=best_plan,
        report=best,
        subgraphs_searched=searched,
        subgraphs_pruned=pruned,
        wall_time=wall_time,
        bound=bound,
    )
