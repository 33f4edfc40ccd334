# -*- coding: utf-8 -*-
"""
Scenario ingestion, persistence, generation and the effective rate table.

Scenario file layout::

    {
      "params": {"minibatch": 512, "max_submodels": 4, "pathloss_exponent": 3.5,
                 "noise_density": "-174 dBm/Hz", "topology": "mesh"},
      "layers": [{"name": "conv1_1", "fp_work": 3538944, "bp_work": 7077888,
                  "act_size": "128 KiB", "grad_size": "128 KiB",
                  "opt_state": 0, "params": 28672}],
      "nodes": [{"id": "c0", "kind": "client", "compute": "5 TFLOPS", "intensity": 0.03125,
                 "memory": "8 GB", "tx_power": "200 mW", "position": [120, 80],
                 "init_fp": "1 ms", "init_bp": "1 ms", "bp_threshold": 32}],
      "links": [{"source": "c0", "target": "s0", "bandwidth": "20 MHz"}],
      "distances": [{"source": "c0", "target": "s0", "distance": 150}],
      "plan": {"cuts": [4], "placement": ["s0"], "micro_batch": 16}
    }

``distances`` and ``plan`` are optional. Layer values are per layer; the
cumulative sums are computed on load.
"""
import json
import logging
import math
from collections import namedtuple
from functools import lru_cache
from types import MappingProxyType

import networkx as nx
import numpy as np
from django.core.exceptions import ValidationError

from . import units
from .exceptions import ScenarioParseError
from .models import (
    CLIENT,
    EXPLICIT,
    LINE,
    MESH,
    SERVER,
    STAR,
    TOPOLOGIES,
    TREE,
    LinkProfile,
    NodeProfile,
    Scenario,
    SplitPlan,
    cumulate_layers,
)
from .profiles import PROFILES
from .validators import node_distance, validate_plan, validate_scenario

logger = logging.getLogger(__name__)


DEFAULT_PATHLOSS = 3.5
DEFAULT_NOISE_DENSITY_DBM = -174.0
DEFAULT_INTENSITY = 1.0 / 32
DEFAULT_INIT_TIME = 0.001
DEFAULT_BP_THRESHOLD = 32
DEFAULT_TX_POWER = 0.2
DEPLOYMENT_SIDE = 500.0
MIN_NODE_SPACING = 1.0

BANDWIDTH_REGIMES = {
    'sub6': (10e6, 50e6),
    'mmwave': (100e6, 200e6),
}
COMPUTE_RANGE = (1e12, 10e12)
TX_POWER_RANGE = (0.1, 0.5)
MEMORY_RANGE_GB = (2.0, 16.0)
BITS_PER_GB = 8e9

TOP_LEVEL_FIELDS = {
    'params': True,
    'layers': True,
    'nodes': True,
    'links': True,
    'distances': False,
    'plan': False,
}
PARAM_FIELDS = {
    'minibatch': True,
    'max_submodels': True,
    'pathloss_exponent': False,
    'noise_density': False,
    'topology': False,
}
LAYER_FIELDS = {
    'name': False,
    'fp_work': True,
    'bp_work': True,
    'act_size': True,
    'grad_size': False,
    'opt_state': False,
    'params': False,
}
NODE_FIELDS = {
    'id': True,
    'kind': True,
    'compute': True,
    'intensity': False,
    'memory': True,
    'tx_power': False,
    'position': False,
    'init_fp': False,
    'init_bp': False,
    'bp_threshold': False,
}
LINK_FIELDS = {
    'source': True,
    'target': True,
    'bandwidth': False,
    'fixed_rate': False,
}
DISTANCE_FIELDS = {
    'source': True,
    'target': True,
    'distance': True,
}
PLAN_FIELDS = {
    'cuts': True,
    'placement': True,
    'micro_batch': False,
}


GeneratorSpec = namedtuple(
    'GeneratorSpec',
    field_names=[
        'servers',
        'clients',
        'topology',
        'bandwidth_regime',
        'profile',
        'layers',
        'max_submodels',
        'minibatch',
        'compute',
        'bandwidth',
        'memory',
    ],
    defaults=[6, 1, MESH, 'sub6', 'vgg16', 16, 4, 512, None, None, None],
)


def _check_fields(record, fields, where):
    if not isinstance(record, dict):
        raise ValidationError(
            '%(where)s: expected an object.', code='invalid_type', params={'where': where},
        )
    unknown = sorted(set(record) - set(fields))
    if unknown:
        raise ValidationError(
            '%(where)s: unknown field "%(field)s".',
            code='unknown_field',
            params={'where': where, 'field': unknown[0]},
        )
    for field, required in fields.items():
        if required and field not in record:
            raise ValidationError(
                '%(where)s: missing field "%(field)s".',
                code='missing_field',
                params={'where': where, 'field': field},
            )


def _integer(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(
            '%(where)s: expected an integer.', code='invalid_type', params={'where': where},
        )
    return value


def _list(value, where):
    if not isinstance(value, list):
        raise ValidationError(
            '%(where)s: expected an array.', code='invalid_type', params={'where': where},
        )
    return value


def _layer_from_dict(record, where):
    _check_fields(record, LAYER_FIELDS, where)
    act_size = units.parse_quantity(record['act_size'], units.BITS, where + '.act_size')
    return {
        'name': record.get('name'),
        'fp_work': units.parse_quantity(record['fp_work'], units.FLOPS, where + '.fp_work'),
        'bp_work': units.parse_quantity(record['bp_work'], units.FLOPS, where + '.bp_work'),
        'act_size': act_size,
        'grad_size': units.parse_quantity(record.get('grad_size', act_size), units.BITS, where + '.grad_size'),
        'opt_state': units.parse_quantity(record.get('opt_state', 0), units.BITS, where + '.opt_state'),
        'params': units.parse_quantity(record.get('params', 0), units.BITS, where + '.params'),
    }


def _node_from_dict(record, where):
    _check_fields(record, NODE_FIELDS, where)
    position = _list(record.get('position', [0.0, 0.0]), where + '.position')
    if len(position) != 2:
        raise ValidationError(
            '%(where)s: position needs two coordinates.', code='invalid_type', params={'where': where},
        )
    return NodeProfile(
        id=str(record['id']),
        kind=record['kind'],
        compute=units.parse_quantity(record['compute'], units.FLOP_RATE, where + '.compute'),
        intensity=units.parse_quantity(record.get('intensity', DEFAULT_INTENSITY), None, where + '.intensity'),
        memory=units.parse_quantity(record['memory'], units.BITS, where + '.memory'),
        tx_power=units.parse_quantity(record.get('tx_power', DEFAULT_TX_POWER), units.WATTS, where + '.tx_power'),
        position=tuple(units.parse_quantity(value, units.METERS, where + '.position') for value in position),
        init_fp=units.parse_quantity(record.get('init_fp', DEFAULT_INIT_TIME), units.SECONDS, where + '.init_fp'),
        init_bp=units.parse_quantity(record.get('init_bp', DEFAULT_INIT_TIME), units.SECONDS, where + '.init_bp'),
        bp_threshold=_integer(record.get('bp_threshold', DEFAULT_BP_THRESHOLD), where + '.bp_threshold'),
    )


def _link_from_dict(record, where):
    _check_fields(record, LINK_FIELDS, where)
    fixed_rate = record.get('fixed_rate')
    if fixed_rate is not None:
        fixed_rate = units.parse_quantity(fixed_rate, units.BIT_RATE, where + '.fixed_rate')
    bandwidth = record.get('bandwidth')
    if bandwidth is not None:
        bandwidth = units.parse_quantity(bandwidth, units.HERTZ, where + '.bandwidth')
    return LinkProfile(
        source=str(record['source']),
        target=str(record['target']),
        bandwidth=bandwidth,
        fixed_rate=fixed_rate,
    )


def plan_from_dict(record, num_layers, where='plan'):
    """Returns ``(plan, micro_batch)``; ``micro_batch`` may be None."""
    _check_fields(record, PLAN_FIELDS, where)
    cuts = [_integer(cut, where + '.cuts') for cut in _list(record['cuts'], where + '.cuts')]
    placement = [str(host) for host in _list(record['placement'], where + '.placement')]
    micro_batch = record.get('micro_batch')
    if micro_batch is not None:
        micro_batch = _integer(micro_batch, where + '.micro_batch')
    return SplitPlan.canonical(cuts, placement, num_layers), micro_batch


def scenario_from_dict(data):
    _check_fields(data, TOP_LEVEL_FIELDS, 'scenario')
    params = data['params']
    _check_fields(params, PARAM_FIELDS, 'params')

    layers = cumulate_layers(
        _layer_from_dict(record, 'layers[{}]'.format(position))
        for position, record in enumerate(_list(data['layers'], 'layers'))
    )
    nodes = tuple(
        _node_from_dict(record, 'nodes[{}]'.format(position))
        for position, record in enumerate(_list(data['nodes'], 'nodes'))
    )
    links = tuple(
        _link_from_dict(record, 'links[{}]'.format(position))
        for position, record in enumerate(_list(data['links'], 'links'))
    )

    distances = None
    if 'distances' in data:
        pairs = []
        for position, record in enumerate(_list(data['distances'], 'distances')):
            where = 'distances[{}]'.format(position)
            _check_fields(record, DISTANCE_FIELDS, where)
            meters = units.parse_quantity(record['distance'], units.METERS, where + '.distance')
            pairs.append(((str(record['source']), str(record['target'])), meters))
        distances = tuple(pairs)

    noise_density = units.dbm_to_watts(DEFAULT_NOISE_DENSITY_DBM)
    if 'noise_density' in params:
        noise_density = units.parse_quantity(params['noise_density'], units.NOISE_DENSITY, 'params.noise_density')

    scenario = Scenario(
        layers=layers,
        nodes=nodes,
        links=links,
        topology=params.get('topology', EXPLICIT),
        minibatch=_integer(params['minibatch'], 'params.minibatch'),
        max_submodels=_integer(params['max_submodels'], 'params.max_submodels'),
        pathloss=units.parse_quantity(params.get('pathloss_exponent', DEFAULT_PATHLOSS), None, 'params.pathloss'),
        noise_density=noise_density,
        distances=distances,
    )
    validate_scenario(scenario)

    if 'plan' in data:
        plan, micro_batch = plan_from_dict(data['plan'], scenario.num_layers)
        validate_plan(scenario, plan)
        if micro_batch is not None and not 1 <= micro_batch <= scenario.minibatch:
            raise ValidationError(
                'plan.micro_batch must lie in [1, %(limit)s].',
                code='micro_batch_range',
                params={'limit': scenario.minibatch},
            )
    return scenario


def _read_json(path):
    with open(path, 'r') as fobj:
        text = fobj.read()
    try:
        return json.loads(text)
    except ValueError as e:
        raise ScenarioParseError(
            'Invalid JSON in {}: {}'.format(path, getattr(e, 'msg', e)),
            line=getattr(e, 'lineno', None),
            column=getattr(e, 'colno', None),
            path=path,
        )


def load_scenario(path):
    return scenario_from_dict(_read_json(path))


def load_plan(path, scenario):
    """
    Reads a plan file, or the embedded ``plan`` of a scenario file, and
    returns ``(plan, micro_batch)``.
    """
    data = _read_json(path)
    if isinstance(data, dict) and 'layers' in data:
        if 'plan' not in data:
            raise ValidationError('%(path)s has no embedded plan.', code='missing_field', params={'path': path})
        data = data['plan']
    plan, micro_batch = plan_from_dict(data, scenario.num_layers)
    validate_plan(scenario, plan)
    return plan, micro_batch


def scenario_to_dict(scenario):
    data = {
        'params': {
            'minibatch': scenario.minibatch,
            'max_submodels': scenario.max_submodels,
            'pathloss_exponent': scenario.pathloss,
            'noise_density': scenario.noise_density,
            'topology': scenario.topology,
        },
        'layers': [
            {
                'name': layer.name,
                'fp_work': layer.fp_work,
                'bp_work': layer.bp_work,
                'act_size': layer.act_size,
                'grad_size': layer.grad_size,
                'opt_state': layer.opt_state,
                'params': layer.params,
            }
            for layer in scenario.layers
        ],
        'nodes': [
            {
                'id': node.id,
                'kind': node.kind,
                'compute': node.compute,
                'intensity': node.intensity,
                'memory': node.memory,
                'tx_power': node.tx_power,
                'position': list(node.position),
                'init_fp': node.init_fp,
                'init_bp': node.init_bp,
                'bp_threshold': node.bp_threshold,
            }
            for node in scenario.nodes
        ],
        'links': [
            dict(
                {'source': link.source, 'target': link.target, 'bandwidth': link.bandwidth},
                **({'fixed_rate': link.fixed_rate} if link.fixed_rate is not None else {})
            )
            for link in scenario.links
        ],
    }
    if scenario.distances is not None:
        data['distances'] = [
            {'source': source, 'target': target, 'distance': meters}
            for (source, target), meters in scenario.distances
        ]
    return data


def save_scenario(scenario, path):
    with open(path, 'w') as fobj:
        json.dump(scenario_to_dict(scenario), fobj, indent=2)
        fobj.write('\n')


def save_plan(path, plan, micro_batch):
    data = {'cuts': list(plan.cuts), 'placement': list(plan.placement), 'micro_batch': micro_batch}
    with open(path, 'w') as fobj:
        json.dump(data, fobj, indent=2)
        fobj.write('\n')


def topology_edges(topology, count):
    """Undirected server adjacency (indices) for a generated topology."""
    if topology == MESH:
        graph = nx.complete_graph(count)
    elif topology == LINE:
        graph = nx.path_graph(count)
    elif topology == STAR:
        graph = nx.star_graph(count - 1)
    elif topology == TREE:
        graph = nx.full_rary_tree(2, count)
    else:
        raise ValidationError(
            'Topology "%(topology)s" cannot be generated.',
            code='unknown_topology',
            params={'topology': topology},
        )
    return sorted(tuple(sorted(edge)) for edge in graph.edges())


def _draw_position(rng, placed):
    radius = DEPLOYMENT_SIDE / 2
    while True:
        distance = radius * math.sqrt(rng.uniform())
        angle = rng.uniform(0, 2 * math.pi)
        position = (float(radius + distance * math.cos(angle)), float(radius + distance * math.sin(angle)))
        if all(math.hypot(position[0] - x, position[1] - y) >= MIN_NODE_SPACING for x, y in placed):
            return position


def generate_scenario(seed, spec=None):
    """
    Draws a random scenario. Positions fall in a disc inscribed in the
    deployment square so that no two nodes are more than 500 m apart.
    """
    spec = spec or GeneratorSpec()
    if spec.servers < 1:
        raise ValidationError('At least one server is required.', code='no_servers')
    if spec.clients < 1:
        raise ValidationError('At least one client is required.', code='no_clients')
    if spec.topology not in TOPOLOGIES or spec.topology == EXPLICIT:
        raise ValidationError(
            'Topology "%(topology)s" cannot be generated.',
            code='unknown_topology',
            params={'topology': spec.topology},
        )
    if spec.bandwidth_regime not in BANDWIDTH_REGIMES:
        raise ValidationError(
            'Unknown bandwidth regime "%(regime)s".',
            code='unknown_regime',
            params={'regime': spec.bandwidth_regime},
        )
    if spec.profile not in PROFILES:
        raise ValidationError(
            'Unknown layer profile "%(profile)s".', code='unknown_profile', params={'profile': spec.profile},
        )

    rng = np.random.default_rng(seed)
    layers = cumulate_layers(PROFILES[spec.profile](rng, spec.layers))
    max_submodels = min(spec.max_submodels, len(layers))
    low, high = BANDWIDTH_REGIMES[spec.bandwidth_regime]

    def draw_bandwidth():
        if spec.bandwidth is not None:
            return float(spec.bandwidth)
        return float(rng.uniform(low, high))

    nodes = []
    placed = []
    kinds = [(CLIENT, 'c{}'.format(i)) for i in range(spec.clients)]
    kinds += [(SERVER, 's{}'.format(i)) for i in range(spec.servers)]
    for kind, node_id in kinds:
        position = _draw_position(rng, placed)
        placed.append(position)
        compute = float(rng.uniform(*COMPUTE_RANGE))
        memory = float(rng.uniform(*MEMORY_RANGE_GB)) * BITS_PER_GB
        nodes.append(NodeProfile(
            id=node_id,
            kind=kind,
            compute=float(spec.compute) if spec.compute is not None else compute,
            intensity=DEFAULT_INTENSITY,
            memory=float(spec.memory) * BITS_PER_GB if spec.memory is not None else memory,
            tx_power=float(rng.uniform(*TX_POWER_RANGE)),
            position=position,
            init_fp=DEFAULT_INIT_TIME,
            init_bp=DEFAULT_INIT_TIME,
            bp_threshold=DEFAULT_BP_THRESHOLD,
        ))

    links = []
    for a, b in topology_edges(spec.topology, spec.servers):
        bandwidth = draw_bandwidth()
        links.append(LinkProfile('s{}'.format(a), 's{}'.format(b), bandwidth))
        links.append(LinkProfile('s{}'.format(b), 's{}'.format(a), bandwidth))
    for i in range(spec.clients):
        bandwidth = draw_bandwidth()
        links.append(LinkProfile('c{}'.format(i), 's0', bandwidth))
        links.append(LinkProfile('s0', 'c{}'.format(i), bandwidth))

    scenario = Scenario(
        layers=layers,
        nodes=tuple(nodes),
        links=tuple(links),
        topology=spec.topology,
        minibatch=spec.minibatch,
        max_submodels=max_submodels,
        pathloss=DEFAULT_PATHLOSS,
        noise_density=units.dbm_to_watts(DEFAULT_NOISE_DENSITY_DBM),
    )
    validate_scenario(scenario)
    logger.debug('Generated {} scenario with {} servers (seed {}).'.format(spec.topology, spec.servers, seed))
    return scenario


def link_rate(scenario, link):
    """Achievable bit/s of a directed link (Shannon capacity, base 2)."""
    if link.fixed_rate is not None:
        return link.fixed_rate
    power = scenario.get_node(link.source).tx_power
    distance = node_distance(scenario, link.source, link.target)
    received = power * distance ** (-scenario.pathloss)
    noise = scenario.noise_density * link.bandwidth
    return link.bandwidth * math.log2(1 + received / noise)


@lru_cache(maxsize=64)
def effective_rate_matrix(scenario):
    """
    Seconds per bit between every ordered pair of nodes that may exchange
    activations: server to server, client to server and server to client.
    Traffic is forwarded store-and-forward over the minimum-delay route,
    relaying through servers only. A client never carries traffic for
    another node, even when its links would give a shorter route.
    Unreachable pairs map to ``math.inf``.
    """
    servers = [node.id for node in scenario.servers]
    server_set = set(servers)
    hops = {}
    for link in scenario.links:
        rate = link_rate(scenario, link)
        hops[(link.source, link.target)] = 1.0 / rate if rate > 0 else math.inf

    relay = nx.DiGraph()
    relay.add_nodes_from(servers)
    for (source, target), delay in hops.items():
        if source in server_set and target in server_set and delay < math.inf:
            relay.add_edge(source, target, delay=delay)
    lengths = dict(nx.all_pairs_dijkstra_path_length(relay, weight='delay'))

    table = {}
    for a in servers:
        for b in servers:
            table[(a, b)] = lengths[a].get(b, math.inf)

    for client in scenario.clients:
        uplinks = [(target, delay) for (source, target), delay in hops.items()
                   if source == client.id and target in server_set]
        downlinks = [(source, delay) for (source, target), delay in hops.items()
                     if target == client.id and source in server_set]
        for server in servers:
            table[(client.id, server)] = min(
                [delay + lengths[access].get(server, math.inf) for access, delay in uplinks] or [math.inf]
            )
            table[(server, client.id)] = min(
                [lengths[server].get(access, math.inf) + delay for access, delay in downlinks] or [math.inf]
            )
    return MappingProxyType(table)
