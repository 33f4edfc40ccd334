# -*- coding: utf-8 -*-
from django.test import SimpleTestCase, override_settings

from splitpipe.bcd import solve_joint
from splitpipe.costmodel import evaluate
from splitpipe.exceptions import InfeasibleError
from splitpipe.mspgraph import solve_msp
from splitpipe.utils import get_scheme

from .utils import layer, make_scenario, node, random_scenario


class BcdSchemeTestCase(SimpleTestCase):

    def test_wraps_alternating_loop(self):
        scenario = random_scenario(3, minibatch=32)
        result = get_scheme('bcd').solve(scenario, allow_node_reuse=False)
        trace = solve_joint(scenario, allow_node_reuse=False)
        self.assertEqual(result.scheme, 'bcd')
        self.assertEqual(result.solution.plan, trace.final.plan)
        self.assertEqual(result.micro_batch, trace.micro_batch)
        self.assertEqual(len(result.trace.iterations), len(trace.iterations))

    def test_default_is_bcd(self):
        scenario = random_scenario(3, minibatch=32)
        self.assertEqual(get_scheme('default').solve(scenario).scheme, 'bcd')


class NoPipelineSchemeTestCase(SimpleTestCase):

    def test_whole_batch(self):
        scenario = random_scenario(5, minibatch=24)
        result = get_scheme('no_pipeline').solve(scenario)
        report = result.solution.report
        self.assertEqual(result.micro_batch, 24)
        self.assertEqual(report.num_micro_batches, 1)
        self.assertEqual(report.L_t, report.T_f)
        self.assertIsNone(result.trace)

    def test_matches_whole_batch_search(self):
        scenario = random_scenario(6, minibatch=32)
        result = get_scheme('no_pipeline').solve(scenario)
        self.assertEqual(result.solution.plan, solve_msp(scenario, 32).plan)


class RandomDrawSchemeTestCase(SimpleTestCase):

    def test_random_cuts_are_deterministic(self):
        scenario = random_scenario(7, servers=3, layers=6, max_submodels=3, minibatch=32)
        first = get_scheme('rc_op').solve(scenario, seed=11)
        second = get_scheme('rc_op').solve(scenario, seed=11)
        self.assertEqual(first.scheme, 'rc_op')
        self.assertEqual(first.solution.plan, second.solution.plan)
        self.assertEqual(first.micro_batch, second.micro_batch)

    def test_random_placement_is_deterministic(self):
        scenario = random_scenario(8, servers=3, layers=6, max_submodels=3, minibatch=32)
        first = get_scheme('rp_oc').solve(scenario, seed=5)
        second = get_scheme('rp_oc').solve(scenario, seed=5)
        self.assertEqual(first.scheme, 'rp_oc')
        self.assertEqual(first.solution.plan, second.solution.plan)
        self.assertEqual(first.micro_batch, second.micro_batch)

    def test_results_are_evaluated_plans(self):
        scenario = random_scenario(9, servers=3, layers=6, max_submodels=3, minibatch=32)
        for key in ('rc_op', 'rp_oc'):
            result = get_scheme(key).solve(scenario, seed=2)
            report = evaluate(scenario, result.solution.plan, result.micro_batch)
            self.assertEqual(result.solution.report.L_t, report.L_t)

    def test_cut_draws_fit_the_layers(self):
        scenario = make_scenario(layers=[layer(), layer(), layer()], max_submodels=3)
        counts = set()
        for seed in range(10):
            plan = get_scheme('rc_op').solve(scenario, seed=seed).solution.plan
            self.assertEqual(list(plan.cuts), sorted(set(plan.cuts)))
            counts.add(plan.effective_count)
        self.assertLessEqual(counts, {2, 3})

    def test_single_server_placement(self):
        scenario = make_scenario(
            layers=[layer(), layer(), layer()],
            servers=[node('s0', compute=2e12)],
            max_submodels=3,
        )
        for seed in range(5):
            result = get_scheme('rp_oc').solve(scenario, seed=seed)
            self.assertEqual(result.solution.plan.placement, ('s0',))

    @override_settings(SPLITPIPE_BASELINE_RETRIES=3)
    def test_gives_up_after_retries(self):
        scenario = make_scenario(servers=[node('s0', memory=1e3), node('s1', memory=1e3)])
        for key in ('rc_op', 'rp_oc'):
            with self.assertRaises(InfeasibleError) as context:
                get_scheme(key).solve(scenario, seed=0)
            self.assertEqual(context.exception.constraint, 'baseline_retries')
