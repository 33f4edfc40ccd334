# -*- coding: utf-8 -*-
from tablib import Dataset


SWEEP_COLUMNS = ('param_value', 'trial', 'scheme', 'L_t', 'T_f', 'T_i', 'b', 'runtime_ms')


class Exporter(object):
    headers = ()

    def __init__(self, rows):
        self.rows = rows

    def get_row(self, row):
        return list(row)

    def get_dataset(self):
        dataset = Dataset(headers=list(self.headers))
        for row in self.rows:
            dataset.append(self.get_row(row))
        return dataset

    def export(self, format='csv'):
        return self.get_dataset().export(format)


class SweepExporter(Exporter):
    headers = SWEEP_COLUMNS

    def get_row(self, row):
        return [row[column] for column in self.headers]


class StageExporter(Exporter):
    """Rows of ``StageTimes.chain()``."""
    headers = ('stage', 'kind', 'k', 'seconds')

    def get_row(self, row):
        index, (kind, k, seconds) = row
        return [index, kind, k, seconds]

    @classmethod
    def from_report(cls, report):
        return cls(list(enumerate(report.stages.chain())))


class EventExporter(Exporter):
    headers = ('event', 'time', 'stage', 'kind', 'micro_batch')


class SimulationExporter(Exporter):
    headers = ('seed', 'mode', 'cv_compute', 'cv_rate', 'makespan', 'L_t', 'num_micro_batches')


class TraceExporter(Exporter):
    headers = ('iteration', 'micro_batch', 'T_1', 'next_micro_batch', 'L_t', 'cuts', 'placement', 'wall_time')

    def get_row(self, row):
        return [
            row.index,
            row.micro_batch,
            row.T_1,
            row.next_micro_batch,
            row.L_t,
            ' '.join(str(cut) for cut in row.plan.cuts),
            ' '.join(row.plan.placement),
            row.wall_time,
        ]


def lp_datasets(lp):
    """Objective, rows, non-zero coefficients and bounds of a LinearProgram."""
    objective = Dataset(headers=['column', 'cost'])
    bounds = Dataset(headers=['column', 'lower', 'upper'])
    for name, cost, upper in zip(lp.columns, lp.objective, lp.upper):
        objective.append([name, float(cost)])
        bounds.append([name, 0.0, float(upper)])
    rows = Dataset(headers=['row', 'sense', 'rhs'])
    coefficients = Dataset(headers=['row', 'column', 'value'])
    for index, name in enumerate(lp.row_names):
        rows.append([name, lp.senses[index], float(lp.rhs[index])])
        for column in lp.matrix[index].nonzero()[0]:
            coefficients.append([name, lp.columns[column], float(lp.matrix[index, column])])
    return [('objective', objective), ('rows', rows), ('coefficients', coefficients), ('bounds', bounds)]


def dump_lp(lp):
    """Tab separated sections, each introduced by a ``# name`` line."""
    parts = ['# constant\t{!r}\n'.format(float(lp.constant))]
    for name, dataset in lp_datasets(lp):
        parts.append('# {}\n{}'.format(name, dataset.export('tsv')))
    return '\n'.join(part.rstrip('\r\n') + '\n' for part in parts)
