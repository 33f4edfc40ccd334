# -*- coding: utf-8 -*-
import logging

import numpy as np

from .bcd import solve_joint
from .conf import get_setting
from .exceptions import InfeasibleError
from .mspgraph import CLIENT_POOL, solve_msp
from .schemes_base import BaseScheme, SchemeResult

logger = logging.getLogger(__name__)


class BcdScheme(BaseScheme):
    verbose_name = 'Alternating optimisation'

    def solve(self, scenario, seed=None, **options):
        trace = solve_joint(scenario, **options)
        return SchemeResult('bcd', trace.final, trace.micro_batch, trace)


class NoPipelineScheme(BaseScheme):
    verbose_name = 'No pipeline'

    def solve(self, scenario, seed=None, **options):
        solution = solve_msp(
            scenario,
            scenario.minibatch,
            lower_bound_provider=options.get('lower_bound_provider'),
            allow_node_reuse=options.get('allow_node_reuse'),
            strict_ti=options.get('strict_ti'),
        )
        return SchemeResult('no_pipeline', solution, scenario.minibatch, None)


class RandomDrawScheme(BaseScheme):
    """
    Draws part of the plan at random and optimises the rest with the
    alternating loop restricted to the drawn part. Infeasible draws are
    retried.
    """
    key = None

    def draw(self, scenario, rng, allow_node_reuse):
        raise NotImplementedError  # pragma: no cover

    def solve(self, scenario, seed=None, **options):
        retries = get_setting('BASELINE_RETRIES')
        allow_node_reuse = options.get('allow_node_reuse')
        if allow_node_reuse is None:
            allow_node_reuse = get_setting('ALLOW_NODE_REUSE')
        options['allow_node_reuse'] = allow_node_reuse
        rng = np.random.default_rng(seed)

        for attempt in range(1, retries + 1):
            vertex_filter = self.draw(scenario, rng, allow_node_reuse)
            try:
                trace = solve_joint(scenario, vertex_filter=vertex_filter, **options)
            except InfeasibleError as error:
                logger.debug('{} draw {} infeasible: {}'.format(self.key, attempt, error))
                continue
            return SchemeResult(self.key, trace.final, trace.micro_batch, trace)
        raise InfeasibleError('baseline_retries', 'No feasible {} draw in {} attempts.'.format(self.key, retries))


class RandomCutScheme(RandomDrawScheme):
    verbose_name = 'Random cuts, optimal placement'
    key = 'rc_op'

    def draw(self, scenario, rng, allow_node_reuse):
        num_layers = scenario.num_layers
        count = int(rng.integers(2, min(scenario.max_submodels, num_layers) + 1))
        cuts = sorted(int(cut) + 1 for cut in rng.choice(num_layers - 1, size=count - 1, replace=False))
        bounds = [0] + cuts + [num_layers]

        def vertex_filter(vertex):
            if vertex.k > count:
                return False
            return (vertex.first, vertex.last) == (bounds[vertex.k - 1] + 1, bounds[vertex.k])
        return vertex_filter


class RandomPlacementScheme(RandomDrawScheme):
    verbose_name = 'Random placement, optimal cuts'
    key = 'rp_oc'

    def draw(self, scenario, rng, allow_node_reuse):
        num_layers = scenario.num_layers
        servers = [server.id for server in scenario.servers]
        largest = scenario.max_submodels if allow_node_reuse else min(scenario.max_submodels, len(servers) + 1)
        if len(servers) == 1:
            largest = 2
        largest = min(largest, num_layers)
        count = int(rng.integers(2, largest + 1))
        if allow_node_reuse:
            placement = [servers[int(rng.integers(len(servers)))]]
            while len(placement) < count - 1:
                node = servers[int(rng.integers(len(servers)))]
                if node != placement[-1]:
                    placement.append(node)
        else:
            placement = [servers[int(index)] for index in rng.choice(len(servers), size=count - 1, replace=False)]

        def vertex_filter(vertex):
            if vertex.k > count:
                return False
            if vertex.node != CLIENT_POOL and vertex.node != placement[vertex.k - 2]:
                return False
            return vertex.k == count or vertex.last < num_layers
        return vertex_filter
