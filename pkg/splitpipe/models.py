# -*- coding: utf-8 -*-
from collections import namedtuple


CLIENT = 'client'
SERVER = 'server'
NODE_KINDS = (CLIENT, SERVER)

MESH = 'mesh'
LINE = 'line'
STAR = 'star'
TREE = 'tree'
EXPLICIT = 'explicit'
TOPOLOGIES = (MESH, LINE, STAR, TREE, EXPLICIT)


BaseLayerProfile = namedtuple(
    'LayerProfile',
    field_names=[
        'index',
        'name',
        'fp_work',
        'bp_work',
        'act_size',
        'grad_size',
        'opt_state',
        'params',
        'fp_work_cum',
        'bp_work_cum',
        'act_size_cum',
        'grad_size_cum',
        'opt_state_cum',
        'param_cum',
    ]
)


class LayerProfile(BaseLayerProfile):
    """
    One model layer. Sizes are bits per sample, work is FLOPs per sample.

    Per-layer values are kept next to the cumulative ones so a saved
    scenario reloads to identical cumulative sums.
    """
    __slots__ = ()

    @property
    def memory_cum(self):
        return self.act_size_cum + self.grad_size_cum + self.opt_state_cum + self.param_cum


def cumulate_layers(records):
    """
    Builds LayerProfiles from per-layer dicts with the keys ``fp_work``,
    ``bp_work``, ``act_size``, ``grad_size``, ``opt_state`` and ``params``.
    """
    layers = []
    totals = dict.fromkeys(['fp_work', 'bp_work', 'act_size', 'grad_size', 'opt_state', 'params'], 0.0)

    for position, record in enumerate(records, start=1):
        for key in totals:
            totals[key] += record[key]
        layers.append(LayerProfile(
            index=position,
            name=record.get('name') or 'layer{}'.format(position),
            fp_work=record['fp_work'],
            bp_work=record['bp_work'],
            act_size=record['act_size'],
            grad_size=record['grad_size'],
            opt_state=record['opt_state'],
            params=record['params'],
            fp_work_cum=totals['fp_work'],
            bp_work_cum=totals['bp_work'],
            act_size_cum=totals['act_size'],
            grad_size_cum=totals['grad_size'],
            opt_state_cum=totals['opt_state'],
            param_cum=totals['params'],
        ))
    return tuple(layers)


BaseNodeProfile = namedtuple(
    'NodeProfile',
    field_names=[
        'id',
        'kind',
        'compute',
        'intensity',
        'memory',
        'tx_power',
        'position',
        'init_fp',
        'init_bp',
        'bp_threshold',
    ]
)


class NodeProfile(BaseNodeProfile):
    __slots__ = ()

    @property
    def is_client(self):
        return self.kind == CLIENT

    @property
    def is_server(self):
        return self.kind == SERVER


LinkProfile = namedtuple(
    'LinkProfile',
    field_names=['source', 'target', 'bandwidth', 'fixed_rate'],
    defaults=[None],
)


BaseScenario = namedtuple(
    'Scenario',
    field_names=[
        'layers',
        'nodes',
        'links',
        'topology',
        'minibatch',
        'max_submodels',
        'pathloss',
        'noise_density',
        'distances',
    ],
    defaults=[None],
)


class Scenario(BaseScenario):
    """
    A complete problem instance.

    ``distances`` is either None (Euclidean distances from node positions)
    or a tuple of ``((source, target), meters)`` pairs.
    """
    __slots__ = ()

    @property
    def num_layers(self):
        return len(self.layers)

    @property
    def clients(self):
        return tuple(node for node in self.nodes if node.is_client)

    @property
    def servers(self):
        return tuple(node for node in self.nodes if node.is_server)

    def get_node(self, node_id):
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)


BaseSplitPlan = namedtuple('SplitPlan', field_names=['cuts', 'placement'])


class SplitPlan(BaseSplitPlan):
    """
    Cut layers c_1 < ... < c_{K-1} and the server hosting each submodel
    k >= 2. Submodel 1 always runs on the client pool.
    """
    __slots__ = ()

    def __new__(cls, cuts, placement):
        return super(SplitPlan, cls).__new__(cls, tuple(cuts), tuple(placement))

    @classmethod
    def canonical(cls, cuts, placement, num_layers):
        """
        Drops empty submodels (equal consecutive cuts, or a last cut equal to
        ``num_layers``). Unordered input is returned untouched for the
        validators to report.
        """
        cuts = list(cuts)
        placement = list(placement)
        bounds = [0] + cuts + [num_layers]
        if len(placement) != len(cuts) or any(a > b for a, b in zip(bounds, bounds[1:])):
            return cls(cuts, placement)

        kept_cuts = []
        kept_placement = []
        for k in range(2, len(bounds)):
            if bounds[k] > bounds[k - 1]:
                kept_cuts.append(bounds[k - 1])
                kept_placement.append(placement[k - 2])
        return cls(kept_cuts, kept_placement)

    @property
    def effective_count(self):
        return len(self.cuts) + 1

    def layer_range(self, k, num_layers):
        """First and last layer (1-based, inclusive) of submodel ``k``."""
        bounds = (0,) + self.cuts + (num_layers,)
        return bounds[k - 1] + 1, bounds[k]

    def host(self, k):
        return self.placement[k - 2]


Violation = namedtuple('Violation', field_names=['code', 'message'])
