# -*- coding: utf-8 -*-
import csv
import io
import math

from django.test import SimpleTestCase

from splitpipe.bcd import solve_joint
from splitpipe.costmodel import evaluate
from splitpipe.exporter import (
    SWEEP_COLUMNS, SimulationExporter, StageExporter, SweepExporter, TraceExporter, dump_lp, lp_datasets,
)
from splitpipe.models import SplitPlan
from splitpipe.relaxation import build_rlt_lp
from splitpipe.simplex import LE, make_program

from .utils import layer, make_scenario, random_scenario


def read(text):
    return list(csv.reader(io.StringIO(text)))


class ExporterTestCase(SimpleTestCase):

    def test_sweep_columns(self):
        row = {
            'position': 0, 'order': 0, 'param_value': 2, 'trial': 1, 'scheme': 'bcd',
            'L_t': 1.5, 'T_f': 1.0, 'T_i': 0.25, 'b': 4, 'runtime_ms': 3.0,
        }
        lines = read(SweepExporter([row]).export('csv'))
        self.assertEqual(lines[0], list(SWEEP_COLUMNS))
        self.assertEqual(lines[1], ['2', '1', 'bcd', '1.5', '1.0', '0.25', '4', '3.0'])

    def test_infeasible_sweep_row(self):
        row = dict.fromkeys(SWEEP_COLUMNS, '')
        row.update(L_t=math.nan, T_f=math.nan, T_i=math.nan)
        lines = read(SweepExporter([row]).export('csv'))
        self.assertEqual(lines[1][3], 'nan')

    def test_stage_rows_follow_chain(self):
        scenario = make_scenario(layers=[layer(), layer(), layer()], max_submodels=3)
        report = evaluate(scenario, SplitPlan([1, 2], ['s0', 's1']), 4)
        lines = read(StageExporter.from_report(report).export('csv'))
        chain = report.stages.chain()
        self.assertEqual(len(lines), len(chain) + 1)
        self.assertEqual([line[1] for line in lines[1:]], [kind for kind, _, _ in chain])
        self.assertEqual(lines[1][:3], ['0', 'client_fp_tx', '1'])
        self.assertEqual(lines[-1][1], 'client_bp_rx')

    def test_trace_rows(self):
        trace = solve_joint(random_scenario(2, minibatch=32))
        lines = read(TraceExporter(trace.iterations).export('csv'))
        self.assertEqual(lines[0][0], 'iteration')
        self.assertEqual(len(lines), len(trace.iterations) + 1)
        first = trace.iterations[0]
        self.assertEqual(lines[1][5], ' '.join(str(cut) for cut in first.plan.cuts))

    def test_simulation_rows(self):
        lines = read(SimulationExporter([['', 'nominal', 0.0, 0.0, 1.25, 1.25, 3]]).export('csv'))
        self.assertEqual(lines[0][4], 'makespan')
        self.assertEqual(lines[1][6], '3')


class DumpLpTestCase(SimpleTestCase):

    def test_small_program(self):
        lp = make_program([1.0, -2.0], [([1.0, 1.0], LE, 4.0)], constant=0.5, columns=['x', 'y'])
        text = dump_lp(lp)
        self.assertTrue(text.startswith('# constant\t0.5\n'))
        for section in ('# objective', '# rows', '# coefficients', '# bounds'):
            self.assertIn(section + '\n', text)
        sections = dict(lp_datasets(lp))
        self.assertEqual(sections['objective'].height, 2)
        self.assertEqual(sections['coefficients'].height, 2)
        self.assertEqual(sections['rows'].height, 1)

    def test_relaxation_program(self):
        scenario = make_scenario(max_submodels=2)
        lp = build_rlt_lp(scenario, 4, allow_node_reuse=False)
        sections = dict(lp_datasets(lp))
        self.assertEqual(sections['objective'].height, len(lp.columns))
        self.assertEqual(sections['rows'].height, len(lp.row_names))
        self.assertEqual(sections['coefficients'].height, int((lp.matrix != 0).sum()))
