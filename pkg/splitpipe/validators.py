# -*- coding: utf-8 -*-
import math

import networkx as nx
from django.core.exceptions import ValidationError
from django.core.validators import MaxValueValidator, MinLengthValidator, MinValueValidator

from .models import NODE_KINDS, TOPOLOGIES, Violation


class MinLayersValidator(MinLengthValidator):

    message = 'A scenario needs at least %(limit_value)d layers (it has %(show_value)d).'
    code = 'min_layers'


class MinMinibatchValidator(MinValueValidator):

    message = 'The mini-batch must hold at least %(limit_value)s sample.'
    code = 'min_minibatch'


class MinSubmodelsValidator(MinValueValidator):

    message = 'At least %(limit_value)s submodels are required.'
    code = 'min_submodels'


class MaxSubmodelsValidator(MaxValueValidator):

    message = 'A model cannot be split into more submodels than it has layers (%(limit_value)s).'
    code = 'max_submodels'


def node_distance(scenario, source, target):
    if scenario.distances is not None:
        for (a, b), meters in scenario.distances:
            if (a, b) == (source, target) or (b, a) == (source, target):
                return meters
    first = scenario.get_node(source).position
    second = scenario.get_node(target).position
    return math.hypot(first[0] - second[0], first[1] - second[1])


def validate_layers(layers):
    MinLayersValidator(2)(layers)
    fields = ('fp_work', 'bp_work', 'act_size', 'grad_size', 'opt_state', 'params')
    for layer in layers:
        for field in fields:
            value = getattr(layer, field)
            if not value >= 0 or math.isinf(value):
                raise ValidationError(
                    'Layer %(layer)s: %(field)s must be a finite value >= 0.',
                    code='negative_value',
                    params={'layer': layer.index, 'field': field},
                )


def validate_node(node):
    if node.kind not in NODE_KINDS:
        raise ValidationError(
            'Node %(node)s: unknown kind "%(kind)s".',
            code='unknown_kind',
            params={'node': node.id, 'kind': node.kind},
        )
    for field in ('compute', 'memory', 'intensity'):
        if not getattr(node, field) > 0:
            raise ValidationError(
                'Node %(node)s: %(field)s must be positive.',
                code='non_positive',
                params={'node': node.id, 'field': field},
            )
    for field in ('init_fp', 'init_bp', 'tx_power', 'bp_threshold'):
        if not getattr(node, field) >= 0:
            raise ValidationError(
                'Node %(node)s: %(field)s must not be negative.',
                code='negative_value',
                params={'node': node.id, 'field': field},
            )


def validate_links(scenario):
    known = {node.id for node in scenario.nodes}
    seen = set()
    for link in scenario.links:
        for endpoint in (link.source, link.target):
            if endpoint not in known:
                raise ValidationError(
                    'Link %(source)s -> %(target)s references unknown node %(node)s.',
                    code='unknown_node',
                    params={'source': link.source, 'target': link.target, 'node': endpoint},
                )
        if link.source == link.target:
            raise ValidationError(
                'Self-link on node %(node)s.', code='self_link', params={'node': link.source},
            )
        if (link.source, link.target) in seen:
            raise ValidationError(
                'Duplicate link %(source)s -> %(target)s.',
                code='duplicate_link',
                params={'source': link.source, 'target': link.target},
            )
        seen.add((link.source, link.target))

        if link.fixed_rate is not None:
            if not link.fixed_rate > 0:
                raise ValidationError(
                    'Link %(source)s -> %(target)s: fixed_rate must be positive.',
                    code='non_positive',
                    params={'source': link.source, 'target': link.target},
                )
            continue
        if not (link.bandwidth or 0) > 0:
            raise ValidationError(
                'Link %(source)s -> %(target)s: bandwidth must be positive.',
                code='non_positive',
                params={'source': link.source, 'target': link.target},
            )
        if not node_distance(scenario, link.source, link.target) > 0:
            raise ValidationError(
                'Link %(source)s -> %(target)s joins nodes at the same position.',
                code='zero_distance',
                params={'source': link.source, 'target': link.target},
            )


def validate_connectivity(scenario):
    graph = nx.DiGraph()
    graph.add_nodes_from(node.id for node in scenario.nodes)
    graph.add_edges_from((link.source, link.target) for link in scenario.links)

    reachable = set()
    for client in scenario.clients:
        reachable.update(nx.descendants(graph, client.id))
    for server in scenario.servers:
        if server.id not in reachable:
            raise ValidationError(
                'Server %(node)s is not reachable from any client.',
                code='unreachable_server',
                params={'node': server.id},
            )


def validate_scenario(scenario):
    """
    Raises ValidationError naming the first violated scenario invariant.
    """
    validate_layers(scenario.layers)

    ids = [node.id for node in scenario.nodes]
    if len(ids) != len(set(ids)):
        raise ValidationError('Node ids must be unique.', code='duplicate_node')
    for node in scenario.nodes:
        validate_node(node)
    if not scenario.clients:
        raise ValidationError('A scenario needs at least one client.', code='no_clients')
    if not scenario.servers:
        raise ValidationError('A scenario needs at least one server.', code='no_servers')

    if scenario.topology not in TOPOLOGIES:
        raise ValidationError(
            'Unknown topology "%(topology)s".',
            code='unknown_topology',
            params={'topology': scenario.topology},
        )
    MinMinibatchValidator(1)(scenario.minibatch)
    MinSubmodelsValidator(2)(scenario.max_submodels)
    MaxSubmodelsValidator(scenario.num_layers)(scenario.max_submodels)
    for field in ('pathloss', 'noise_density'):
        if not getattr(scenario, field) > 0:
            raise ValidationError(
                '%(field)s must be positive.', code='non_positive', params={'field': field},
            )

    validate_links(scenario)
    validate_connectivity(scenario)


def plan_violations(scenario, plan, allow_node_reuse=True):
    """
    Structural checks of a plan against a scenario: cut range and order,
    placement length, hosts being servers, distinct neighbours, submodel
    count and, when reuse is off, one submodel per server.
    """
    violations = []
    num_layers = scenario.num_layers
    servers = {node.id for node in scenario.servers}

    if any(cut < 1 or cut >= num_layers for cut in plan.cuts):
        violations.append(Violation(
            'cut_range', 'Cuts must lie in [1, {}], got {}.'.format(num_layers - 1, list(plan.cuts)),
        ))
    if any(a >= b for a, b in zip(plan.cuts, plan.cuts[1:])):
        violations.append(Violation(
            'cut_order', 'Cuts must be strictly increasing, got {}.'.format(list(plan.cuts)),
        ))
    if len(plan.placement) != len(plan.cuts):
        violations.append(Violation(
            'placement_length',
            'Expected {} hosts for {} cuts, got {}.'.format(len(plan.cuts), len(plan.cuts), len(plan.placement)),
        ))
    if not 2 <= plan.effective_count <= scenario.max_submodels:
        violations.append(Violation(
            'submodel_count',
            'Plan has {} submodels, allowed range is [2, {}].'.format(plan.effective_count, scenario.max_submodels),
        ))
    for host in plan.placement:
        if host not in servers:
            violations.append(Violation('not_a_server', 'Node {} is not a server.'.format(host)))
    if any(a == b for a, b in zip(plan.placement, plan.placement[1:])):
        violations.append(Violation(
            'adjacent_same_node', 'Consecutive submodels share a node: {}.'.format(list(plan.placement)),
        ))
    if not allow_node_reuse and len(set(plan.placement)) != len(plan.placement):
        violations.append(Violation(
            'node_reuse', 'A server hosts more than one submodel: {}.'.format(list(plan.placement)),
        ))
    return violations


def validate_plan(scenario, plan, allow_node_reuse=True):
    violations = plan_violations(scenario, plan, allow_node_reuse=allow_node_reuse)
    if violations:
        raise ValidationError(
            [ValidationError(violation.message, code=violation.code) for violation in violations]
        )
