# -*- coding: utf-8 -*-
"""
Command line front door.

Exit codes: 0 success, 1 usage, 2 invalid input, 3 infeasible, 4 internal error.
"""
import argparse
import json
import logging
import logging.config
import sys

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured, ValidationError

from . import __version__
from .conf import logging_config, setup
from .costmodel import evaluate
from .exceptions import InfeasibleError, OracleLimitExceeded, ScenarioParseError
from .exporter import EventExporter, SimulationExporter, StageExporter, SweepExporter, TraceExporter, dump_lp
from .helpers import git_revision, parse_values
from .models import EXPLICIT, TOPOLOGIES
from .oracle import enumerate_joint
from .pipesim import NOMINAL, PERTURBED, simulate
from .profiles import PROFILES
from .relaxation import build_rlt_lp
from .scenario import (
    BANDWIDTH_REGIMES, GeneratorSpec, generate_scenario, load_plan, load_scenario, save_plan,
    save_scenario, scenario_to_dict,
)
from .sweep import SWEEP_PARAMS, run_sweep
from .utils import get_scheme
from .validators import validate_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4

SCHEMES = ('bcd', 'rc_op', 'rp_oc', 'no_pipeline')
BOUNDS = ('fast', 'rlt')


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError('{}: {}'.format(self.prog, message))


def _write(text, path=None):
    if path:
        with open(path, 'w', newline='') as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _solver_options(args):
    return {
        'lower_bound_provider': args.bound,
        'allow_node_reuse': args.allow_node_reuse,
        'strict_ti': args.strict_paper_ti,
    }


def _with_max_submodels(scenario, max_submodels):
    if max_submodels is None:
        return scenario
    scenario = scenario._replace(max_submodels=max_submodels)
    validate_scenario(scenario)
    return scenario


def _generator_spec(args):
    return GeneratorSpec(
        servers=args.servers,
        clients=args.clients,
        topology=args.topology,
        bandwidth_regime=args.bandwidth_regime,
        profile=args.profile,
        layers=args.layers,
        max_submodels=args.max_submodels,
        minibatch=args.minibatch,
    )


def cmd_generate(args):
    spec = _generator_spec(args)._replace(
        compute=None if args.compute is None else args.compute * 1e12,
        bandwidth=None if args.bandwidth is None else args.bandwidth * 1e6,
        memory=args.memory,
    )
    scenario = generate_scenario(args.seed, spec)
    if args.output:
        save_scenario(scenario, args.output)
    else:
        _write(json.dumps(scenario_to_dict(scenario), indent=2) + '\n')
    return EXIT_OK


def cmd_optimize(args):
    scenario = _with_max_submodels(load_scenario(args.scenario), args.max_submodels)
    options = _solver_options(args)
    if args.scheme != 'no_pipeline':
        options.update(tolerance=args.tolerance, b0=args.b0)
    result = get_scheme(args.scheme).solve(scenario, seed=args.seed, **options)
    report = result.solution.report
    plan = result.solution.plan

    lines = [
        ('scheme', result.scheme),
        ('cuts', ' '.join(str(cut) for cut in plan.cuts)),
        ('placement', ' '.join(plan.placement)),
        ('micro_batch', report.micro_batch),
        ('num_micro_batches', report.num_micro_batches),
        ('T_f', repr(report.T_f)),
        ('T_i', repr(report.T_i)),
        ('L_t', repr(report.L_t)),
    ]
    if result.trace is not None:
        lines += [('iterations', len(result.trace.iterations)), ('converged', result.trace.converged)]
    _write(''.join('{}: {}\n'.format(key, value) for key, value in lines))

    if args.plan_out:
        save_plan(args.plan_out, plan, report.micro_batch)
    if args.stages_csv:
        _write(StageExporter.from_report(report).export('csv'), args.stages_csv)
    if args.trace_csv and result.trace is not None:
        _write(TraceExporter(result.trace.iterations).export('csv'), args.trace_csv)
    if args.lp_dump:
        lp = build_rlt_lp(scenario, report.micro_batch, allow_node_reuse=args.allow_node_reuse)
        _write(dump_lp(lp), args.lp_dump)
    return EXIT_OK


def cmd_simulate(args):
    scenario = load_scenario(args.scenario)
    plan, micro_batch = load_plan(args.plan, scenario)
    if args.micro_batch is not None:
        micro_batch = args.micro_batch
    if micro_batch is None:
        raise UsageError('The plan file has no micro_batch; pass --micro-batch.')
    analytic = evaluate(scenario, plan, micro_batch, strict_ti=False)

    cv_compute = args.cv if args.cv_compute is None else args.cv_compute
    cv_rate = args.cv if args.cv_rate is None else args.cv_rate
    perturbed = bool(cv_compute or cv_rate)
    seeds = [args.seed + offset for offset in range(args.seeds)] if perturbed else [None]

    rows = []
    events = None
    for seed in seeds:
        result = simulate(
            scenario, plan, micro_batch,
            mode=PERTURBED if perturbed else NOMINAL,
            cv_compute=cv_compute,
            cv_rate=cv_rate,
            seed=seed,
            ragged=args.ragged,
            record_events=bool(args.events),
        )
        if events is None and result.events is not None:
            events = result.events
        rows.append([
            '' if seed is None else seed,
            PERTURBED if perturbed else NOMINAL,
            cv_compute,
            cv_rate,
            result.makespan,
            analytic.L_t,
            result.num_micro_batches,
        ])
    _write(SimulationExporter(rows).export('csv'), args.output)
    if args.events:
        _write(EventExporter(events or ()).export('csv'), args.events)
    return EXIT_OK


def cmd_sweep(args):
    try:
        values = parse_values(args.values)
    except ValueError as e:
        raise UsageError('Invalid --values: {}'.format(e))
    if not values:
        raise UsageError('--values is empty.')
    schemes = [key.strip() for key in args.schemes.split(',') if key.strip()]
    options = _solver_options(args)
    rows = run_sweep(
        args.param, values,
        trials=args.trials,
        seed=args.seed,
        schemes=schemes,
        base=_generator_spec(args),
        options=options,
        jobs=args.jobs,
    )
    _write(SweepExporter(rows).export('csv'), args.output)
    return EXIT_OK


def cmd_oracle(args):
    scenario = _with_max_submodels(load_scenario(args.scenario), args.max_submodels)
    optimum = enumerate_joint(scenario, limit=args.limit, allow_node_reuse=args.allow_node_reuse,
                              strict_ti=args.strict_paper_ti)
    options = _solver_options(args)
    options.update(tolerance=args.tolerance, b0=args.b0)
    bcd = get_scheme('bcd').solve(scenario, seed=args.seed, **options)
    best = optimum.report.L_t
    found = bcd.solution.report.L_t
    lines = [
        ('cuts', ' '.join(str(cut) for cut in optimum.plan.cuts)),
        ('placement', ' '.join(optimum.plan.placement)),
        ('micro_batch', optimum.micro_batch),
        ('L_t', repr(best)),
        ('evaluated', optimum.evaluated),
        ('bcd_L_t', repr(found)),
        ('bcd_micro_batch', bcd.micro_batch),
        ('gap', repr((found - best) / best if best > 0 else 0.0)),
    ]
    _write(''.join('{}: {}\n'.format(key, value) for key, value in lines))
    return EXIT_OK


def _add_generator_arguments(parser):
    parser.add_argument('--servers', '-N', type=int, default=6)
    parser.add_argument('--clients', '-M', type=int, default=1)
    parser.add_argument('--topology', choices=[name for name in TOPOLOGIES if name != EXPLICIT], default='mesh')
    parser.add_argument('--bandwidth-regime', choices=sorted(BANDWIDTH_REGIMES), default='sub6')
    parser.add_argument('--profile', choices=sorted(PROFILES), default='vgg16')
    parser.add_argument('--layers', type=int, default=16, help='Layer count of the random profile.')
    parser.add_argument('--K', dest='max_submodels', type=int, default=4)
    parser.add_argument('--minibatch', '-B', type=int, default=512)


def _add_solver_arguments(parser):
    parser.add_argument('--bound', choices=BOUNDS, default=None)
    parser.add_argument('--strict-paper-ti', action='store_true', default=None,
                        help='Leave the last submodel out of the pipeline interval.')
    parser.add_argument('--allow-node-reuse', action='store_true', default=None,
                        help='Let a server host several non-adjacent submodels.')


def build_parser():
    parser = ArgumentParser(prog='splitpipe', description='Pipelined split learning planner.')
    parser.add_argument('--version', action='version',
                        version='splitpipe {} ({})'.format(__version__, git_revision()))
    parser.add_argument('-v', '--verbosity', type=int, choices=[0, 1, 2, 3], default=1)
    commands = parser.add_subparsers(dest='command', parser_class=ArgumentParser)
    commands.required = True

    generate = commands.add_parser('generate', help='Draw a random scenario.')
    generate.add_argument('--seed', type=int, required=True)
    _add_generator_arguments(generate)
    generate.add_argument('--compute', type=float, help='Fixed compute speed of every node, TFLOP/s.')
    generate.add_argument('--bandwidth', type=float, help='Fixed bandwidth of every link, MHz.')
    generate.add_argument('--memory', type=float, help='Fixed memory of every node, GB.')
    generate.add_argument('--output', '-o')
    generate.set_defaults(handler=cmd_generate)

    optimize = commands.add_parser('optimize', help='Choose cuts, placement and micro-batch.')
    optimize.add_argument('scenario')
    optimize.add_argument('--K', dest='max_submodels', type=int)
    optimize.add_argument('--scheme', choices=SCHEMES, default='bcd')
    optimize.add_argument('--seed', type=int, default=0)
    optimize.add_argument('--b0', type=int)
    optimize.add_argument('--tolerance', type=float)
    optimize.add_argument('--plan-out')
    optimize.add_argument('--stages-csv')
    optimize.add_argument('--trace-csv')
    optimize.add_argument('--lp-dump', help='Write the linear relaxation at the chosen micro-batch.')
    _add_solver_arguments(optimize)
    optimize.set_defaults(handler=cmd_optimize)

    simulate_parser = commands.add_parser('simulate', help='Simulate a plan.')
    simulate_parser.add_argument('scenario')
    simulate_parser.add_argument('plan')
    simulate_parser.add_argument('--micro-batch', type=int)
    simulate_parser.add_argument('--cv', type=float, default=0.0)
    simulate_parser.add_argument('--cv-compute', type=float)
    simulate_parser.add_argument('--cv-rate', type=float)
    simulate_parser.add_argument('--seeds', type=int, default=1)
    simulate_parser.add_argument('--seed', type=int, default=0)
    simulate_parser.add_argument('--ragged', action='store_true')
    simulate_parser.add_argument('--events')
    simulate_parser.add_argument('--output', '-o')
    simulate_parser.set_defaults(handler=cmd_simulate)

    sweep = commands.add_parser('sweep', help='Sweep one generator parameter.')
    sweep.add_argument('--param', choices=sorted(SWEEP_PARAMS), required=True)
    sweep.add_argument('--values', required=True, help='e.g. "2..10" or "10,50,100".')
    sweep.add_argument('--trials', type=int, default=1)
    sweep.add_argument('--seed', type=int, default=0)
    sweep.add_argument('--schemes', default=','.join(SCHEMES))
    sweep.add_argument('--jobs', type=int, default=1)
    sweep.add_argument('--output', '-o')
    _add_generator_arguments(sweep)
    _add_solver_arguments(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    oracle = commands.add_parser('oracle', help='Exhaustive joint optimum and the gap of the alternating solver.')
    oracle.add_argument('scenario')
    oracle.add_argument('--K', dest='max_submodels', type=int)
    oracle.add_argument('--limit', type=int)
    oracle.add_argument('--seed', type=int, default=0)
    oracle.add_argument('--b0', type=int)
    oracle.add_argument('--tolerance', type=float)
    _add_solver_arguments(oracle)
    oracle.set_defaults(handler=cmd_oracle)
    return parser


def configure_logging(verbosity):
    config = logging_config(verbosity)
    if settings.configured:
        logging.config.dictConfig(config)
    else:
        setup(LOGGING=config)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_USAGE
    except SystemExit as e:
        return e.code or EXIT_OK

    configure_logging(args.verbosity)
    try:
        return args.handler(args)
    except UsageError as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_USAGE
    except ValidationError as e:
        sys.stderr.write('Invalid input: {}\n'.format('; '.join(e.messages)))
        return EXIT_INVALID
    except (ScenarioParseError, OracleLimitExceeded, ImproperlyConfigured) as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_INVALID
    except InfeasibleError as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_INFEASIBLE
    except Exception:
        logger.exception('Unexpected failure.')
        return EXIT_INTERNAL
