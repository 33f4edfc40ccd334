# -*- coding: utf-8 -*-
import json
import math
import os
from unittest import skipUnless

import networkx as nx
import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from splitpipe import units
from splitpipe.exceptions import ScenarioParseError
from splitpipe.models import CLIENT, LINE, MESH, STAR, LinkProfile, SplitPlan
from splitpipe.scenario import (
    BANDWIDTH_REGIMES, BITS_PER_GB, COMPUTE_RANGE, DEPLOYMENT_SIDE, MEMORY_RANGE_GB, MIN_NODE_SPACING, TX_POWER_RANGE,
    GeneratorSpec, effective_rate_matrix, generate_scenario, link_rate, load_plan, load_scenario, save_plan,
    save_scenario, scenario_from_dict, scenario_to_dict,
)
from splitpipe.validators import validate_scenario

from .utils import TempDirMixin, fixture_path, layer, make_scenario, node, random_scenario


class LoadScenarioTestCase(TempDirMixin, SimpleTestCase):

    def load_fixture_dict(self, name):
        with open(fixture_path(name)) as fobj:
            return json.load(fobj)

    def test_minimal_file(self):
        scenario = load_scenario(fixture_path('minimal.json'))
        self.assertEqual(scenario.num_layers, 2)
        self.assertEqual(len(scenario.servers), 2)
        self.assertEqual(len(scenario.clients), 1)
        self.assertEqual(scenario.layers[1].fp_work_cum, 2e9)
        self.assertEqual(scenario.get_node('s0').compute, 2e12)

    def test_defaults_file(self):
        scenario = load_scenario(fixture_path('table1_defaults.json'))
        self.assertEqual(scenario.minibatch, 512)
        self.assertEqual(scenario.pathloss, 3.5)
        self.assertEqual(scenario.get_node('c0').intensity, 1.0 / 32)
        self.assertAlmostEqual(scenario.noise_density, units.dbm_to_watts(-174))
        self.assertEqual(scenario.get_node('s1').memory, 6 * 8e9)

    def test_round_trip(self):
        scenario = load_scenario(fixture_path('table1_defaults.json'))
        save_scenario(scenario, self.path('copy.json'))
        self.assertEqual(load_scenario(self.path('copy.json')), scenario)

    def test_invalid_json(self):
        with open(self.path('broken.json'), 'w') as fobj:
            fobj.write('{\n  "params": ,\n}')
        with self.assertRaises(ScenarioParseError) as context:
            load_scenario(self.path('broken.json'))
        self.assertEqual(context.exception.line, 2)

    def test_unknown_field(self):
        data = self.load_fixture_dict('minimal.json')
        data['layers'][0]['colour'] = 'red'
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'unknown_field')

    def test_missing_field(self):
        data = self.load_fixture_dict('minimal.json')
        del data['nodes'][1]['memory']
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'missing_field')

    def test_bad_unit(self):
        data = self.load_fixture_dict('minimal.json')
        data['nodes'][0]['compute'] = '3 MHz'
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'invalid_unit')

    def test_negative_work(self):
        data = self.load_fixture_dict('minimal.json')
        data['layers'][1]['fp_work'] = -1
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'negative_value')

    def test_too_many_submodels(self):
        data = self.load_fixture_dict('minimal.json')
        data['params']['max_submodels'] = 3
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'max_submodels')

    def test_unreachable_server(self):
        data = self.load_fixture_dict('minimal.json')
        data['links'] = [link for link in data['links'] if 's1' not in (link['source'], link['target'])]
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'unreachable_server')

    def test_embedded_plan(self):
        data = self.load_fixture_dict('minimal.json')
        data['plan'] = {'cuts': [1], 'placement': ['s1'], 'micro_batch': 4}
        path = self.write_json('with_plan.json', data)
        scenario = load_scenario(path)
        self.assertEqual(load_plan(path, scenario), (SplitPlan([1], ['s1']), 4))

    def test_embedded_plan_out_of_range(self):
        data = self.load_fixture_dict('minimal.json')
        data['plan'] = {'cuts': [1], 'placement': ['s1'], 'micro_batch': 9}
        with self.assertRaises(ValidationError) as context:
            scenario_from_dict(data)
        self.assertEqual(context.exception.code, 'micro_batch_range')

    def test_plan_file(self):
        scenario = load_scenario(fixture_path('minimal.json'))
        save_plan(self.path('plan.json'), SplitPlan([1], ['s0']), 2)
        self.assertEqual(load_plan(self.path('plan.json'), scenario), (SplitPlan([1], ['s0']), 2))

    def test_invalid_plan_file(self):
        scenario = load_scenario(fixture_path('minimal.json'))
        path = self.write_json('plan.json', {'cuts': [1], 'placement': ['c0']})
        with self.assertRaises(ValidationError) as context:
            load_plan(path, scenario)
        self.assertIn('not_a_server', [error.code for error in context.exception.error_list])


class QuantityTestCase(SimpleTestCase):

    def test_units(self):
        self.assertEqual(units.parse_quantity('20 MHz', units.HERTZ), 20e6)
        self.assertEqual(units.parse_quantity('2 KiB', units.BITS), 2 * 8 * 1024)
        self.assertEqual(units.parse_quantity(5, units.SECONDS), 5.0)
        self.assertAlmostEqual(units.parse_quantity('30 dBm', units.WATTS), 1.0)

    def test_rejects_garbage(self):
        with self.assertRaises(ValidationError):
            units.parse_quantity('fast', units.FLOP_RATE)
        with self.assertRaises(ValidationError):
            units.parse_quantity(True, units.BITS)


class SplitPlanTestCase(SimpleTestCase):

    def test_canonical_drops_empty_submodels(self):
        plan = SplitPlan.canonical([2, 2], ['s0', 's1'], 4)
        self.assertEqual(plan, SplitPlan([2], ['s1']))
        plan = SplitPlan.canonical([1, 4], ['s0', 's1'], 4)
        self.assertEqual(plan, SplitPlan([1], ['s0']))

    def test_layer_range(self):
        plan = SplitPlan([1, 3], ['s0', 's1'])
        self.assertEqual(plan.layer_range(1, 5), (1, 1))
        self.assertEqual(plan.layer_range(2, 5), (2, 3))
        self.assertEqual(plan.layer_range(3, 5), (4, 5))
        self.assertEqual(plan.host(3), 's1')


class GenerateScenarioTestCase(SimpleTestCase):

    def test_deterministic(self):
        spec = GeneratorSpec(servers=6)
        self.assertEqual(generate_scenario(7, spec), generate_scenario(7, spec))
        self.assertNotEqual(generate_scenario(7, spec), generate_scenario(8, spec))

    def test_line_of_two(self):
        scenario = generate_scenario(7, GeneratorSpec(servers=2, topology=LINE))
        server_links = [link for link in scenario.links if link.source.startswith('s') and link.target.startswith('s')]
        self.assertEqual(sorted((link.source, link.target) for link in server_links), [('s0', 's1'), ('s1', 's0')])

    def test_ranges(self):
        scenario = generate_scenario(3, GeneratorSpec(servers=8, topology=STAR, bandwidth_regime='mmwave'))
        self.assertEqual(scenario.minibatch, 512)
        self.assertEqual(scenario.num_layers, 16)
        for item in scenario.nodes:
            self.assertTrue(1e12 <= item.compute <= 10e12)
            self.assertTrue(2 * 8e9 <= item.memory <= 16 * 8e9)
            self.assertTrue(0.1 <= item.tx_power <= 0.5)
            self.assertEqual(item.bp_threshold, 32)
        for link in scenario.links:
            self.assertTrue(100e6 <= link.bandwidth <= 200e6)
        for a in scenario.nodes:
            for b in scenario.nodes:
                self.assertLessEqual(abs(complex(*a.position) - complex(*b.position)), 500.0)

    def test_fixed_knobs(self):
        spec = GeneratorSpec(servers=3, compute=2e12, bandwidth=30e6, memory=4.0)
        scenario = generate_scenario(1, spec)
        self.assertEqual({item.compute for item in scenario.nodes}, {2e12})
        self.assertEqual({link.bandwidth for link in scenario.links}, {30e6})
        self.assertEqual({item.memory for item in scenario.nodes}, {4.0 * 8e9})

    def test_unknown_profile(self):
        with self.assertRaises(ValidationError):
            generate_scenario(1, GeneratorSpec(profile='resnet'))


class RateTestCase(SimpleTestCase):

    def test_unit_snr(self):
        scenario = make_scenario(
            servers=[node('s0', position=(1.0, 0.0)), node('s1', position=(0.0, 2.0))],
            clients=[node('c0', kind=CLIENT, position=(0.0, 0.0))],
            links=[
                LinkProfile('c0', 's0', 1e6),
                LinkProfile('s0', 'c0', 1e6),
                LinkProfile('s0', 's1', None, 1e8),
                LinkProfile('s1', 's0', None, 1e8),
            ],
        )
        # 0.2 W over 1 m against a noise floor of 0.2 W
        scenario = scenario._replace(noise_density=0.2 / 1e6)
        rate = link_rate(scenario, scenario.links[0])
        self.assertAlmostEqual(rate, 1e6, delta=1e-3)
        self.assertAlmostEqual(effective_rate_matrix(scenario)[('c0', 's0')], 1e-6, delta=1e-15)

    def test_relay_through_servers(self):
        scenario = make_scenario(
            layers=[layer(), layer(), layer()],
            servers=[node('s0'), node('s1'), node('s2')],
            links=[
                LinkProfile('c0', 's0', None, 1e8),
                LinkProfile('s0', 'c0', None, 1e8),
                LinkProfile('s0', 's1', None, 2e8),
                LinkProfile('s1', 's0', None, 2e8),
                LinkProfile('s0', 's2', None, 4e8),
                LinkProfile('s2', 's0', None, 4e8),
            ],
            max_submodels=3,
        )
        table = effective_rate_matrix(scenario)
        self.assertAlmostEqual(table[('s1', 's2')], 1 / 2e8 + 1 / 4e8)
        self.assertAlmostEqual(table[('c0', 's2')], 1 / 1e8 + 1 / 4e8)
        self.assertAlmostEqual(table[('s2', 'c0')], 1 / 4e8 + 1 / 1e8)

    def test_clients_do_not_relay(self):
        fast, slow = 1e9, 1e7
        scenario = make_scenario(
            servers=[node('s0'), node('s1'), node('s2')],
            clients=[node('c0', kind=CLIENT), node('c1', kind=CLIENT)],
            links=[
                LinkProfile('c0', 's0', None, fast),
                LinkProfile('s0', 'c0', None, fast),
                LinkProfile('c0', 's1', None, fast),
                LinkProfile('s1', 'c0', None, fast),
                LinkProfile('c1', 'c0', None, fast),
                LinkProfile('c1', 's2', None, slow),
                LinkProfile('s0', 's2', None, slow),
                LinkProfile('s2', 's0', None, slow),
                LinkProfile('s2', 's1', None, slow),
                LinkProfile('s1', 's2', None, slow),
            ],
        )
        table = effective_rate_matrix(scenario)
        self.assertAlmostEqual(table[('s0', 's1')], 2 / slow)
        self.assertAlmostEqual(table[('c1', 's1')], 2 / slow)
        self.assertEqual(table[('s1', 'c1')], math.inf)

    def test_matches_route_enumeration(self):
        servers = ['s0', 's1', 's2', 's3']
        clients = ['c0', 'c1']
        for seed in range(10):
            rng = np.random.default_rng(seed)
            links = []
            for a, b in zip(servers, servers[1:] + servers[:1]):
                links.append(LinkProfile(a, b, None, float(rng.uniform(1e7, 1e9))))
                links.append(LinkProfile(b, a, None, float(rng.uniform(1e7, 1e9))))
            for client in clients:
                links.append(LinkProfile(client, 's0', None, float(rng.uniform(1e7, 1e9))))
            taken = {(link.source, link.target) for link in links}
            for a in servers + clients:
                for b in servers + clients:
                    if a != b and (a, b) not in taken and rng.uniform() < 0.4:
                        links.append(LinkProfile(a, b, None, float(rng.uniform(1e7, 1e9))))
            scenario = make_scenario(
                servers=[node(name) for name in servers],
                clients=[node(name, kind=CLIENT) for name in clients],
                links=links,
            )

            graph = nx.DiGraph()
            for link in links:
                graph.add_edge(link.source, link.target, delay=1.0 / link.fixed_rate)
            table = effective_rate_matrix(scenario)
            for (a, b), value in table.items():
                routes = [
                    sum(graph.edges[u, v]['delay'] for u, v in zip(route, route[1:]))
                    for route in nx.all_simple_paths(graph, a, b)
                    if all(hop in servers for hop in route[1:-1])
                ]
                expected = min(routes, default=math.inf)
                if expected == math.inf:
                    self.assertEqual(value, math.inf)
                else:
                    self.assertAlmostEqual(value, expected, delta=1e-12 * expected)

    def test_server_relabelling(self):
        scenario = random_scenario(5, servers=4, layers=4, max_submodels=3, clients=2)
        rename = {'s0': 's2', 's1': 's3', 's2': 's1', 's3': 's0'}

        def renamed(name):
            return rename.get(name, name)

        relabelled = scenario._replace(
            nodes=tuple(item._replace(id=renamed(item.id)) for item in scenario.nodes),
            links=tuple(link._replace(source=renamed(link.source), target=renamed(link.target))
                        for link in scenario.links),
        )
        before = effective_rate_matrix(scenario)
        after = effective_rate_matrix(relabelled)
        self.assertEqual(set(after), {(renamed(a), renamed(b)) for a, b in before})
        for (a, b), value in before.items():
            self.assertAlmostEqual(after[(renamed(a), renamed(b))], value, delta=1e-12 * value)


class GeneratedScenarioTestCase(TempDirMixin, SimpleTestCase):

    def test_round_trip(self):
        for seed in range(5):
            for spec in (GeneratorSpec(servers=4, layers=6, profile='random', minibatch=32),
                         GeneratorSpec(servers=3, clients=2, topology=STAR, bandwidth_regime='mmwave')):
                scenario = generate_scenario(seed, spec)
                self.assertEqual(scenario_from_dict(json.loads(json.dumps(scenario_to_dict(scenario)))), scenario)
                save_scenario(scenario, self.path('generated.json'))
                self.assertEqual(load_scenario(self.path('generated.json')), scenario)

    @skipUnless(os.environ.get('SPLITPIPE_ACCEPTANCE'), 'set SPLITPIPE_ACCEPTANCE to run')
    def test_invariants_over_many_seeds(self):
        for seed in range(1000):
            spec = GeneratorSpec(servers=2 + seed % 7, clients=1 + seed % 2, topology=(MESH, STAR, LINE)[seed % 3],
                                 bandwidth_regime=('sub6', 'mmwave')[seed % 2])
            scenario = generate_scenario(seed, spec)
            validate_scenario(scenario)
            low, high = BANDWIDTH_REGIMES[spec.bandwidth_regime]
            for item in scenario.nodes:
                self.assertTrue(COMPUTE_RANGE[0] <= item.compute <= COMPUTE_RANGE[1])
                self.assertTrue(MEMORY_RANGE_GB[0] * BITS_PER_GB <= item.memory <= MEMORY_RANGE_GB[1] * BITS_PER_GB)
                self.assertTrue(TX_POWER_RANGE[0] <= item.tx_power <= TX_POWER_RANGE[1])
            for link in scenario.links:
                self.assertTrue(low <= link.bandwidth <= high)
            positions = [complex(*item.position) for item in scenario.nodes]
            for i, a in enumerate(positions):
                for b in positions[i + 1:]:
                    self.assertGreaterEqual(abs(a - b), MIN_NODE_SPACING)
                    self.assertLessEqual(abs(a - b), DEPLOYMENT_SIDE)
            table = effective_rate_matrix(scenario)
            for client in scenario.clients:
                self.assertTrue(any(table[(client.id, server.id)] < math.inf for server in scenario.servers))
