# -*- coding: utf-8 -*-
"""
Discrete-event simulation of micro-batches flowing through the pipeline.

Each stage (client composite stages, server compute, link transfers) is a
unit-capacity ``simpy.Resource`` with an unbounded FIFO queue. Every
micro-batch walks the stage chain in order; the makespan is the time the
last one leaves the final stage.
"""
import logging
from collections import namedtuple

import numpy as np
import simpy

from .costmodel import check_feasibility, stage_times
from .exceptions import InfeasibleError
from .helpers import ceil_div
from .models import LinkProfile
from .scenario import link_rate

logger = logging.getLogger(__name__)

NOMINAL = 'nominal'
PERTURBED = 'perturbed'
MODES = (NOMINAL, PERTURBED)

# Lowest multiplier a perturbed compute speed or rate may take.
MIN_FACTOR = 0.1

START = 'start'
FINISH = 'finish'


Stage = namedtuple('Stage', field_names=['id', 'kind', 'k', 'service_time'])

SimEvent = namedtuple('SimEvent', field_names=['event', 'time', 'stage', 'kind', 'micro_batch'])

SimResult = namedtuple(
    'SimResult',
    field_names=['makespan', 'busy', 'idle', 'events', 'stages', 'num_micro_batches'],
)


def build_stages(scenario, plan, b):
    return tuple(
        Stage(id=index, kind=kind, k=k, service_time=seconds)
        for index, (kind, k, seconds) in enumerate(stage_times(scenario, plan, b).chain())
    )


def perturb_scenario(scenario, rng, cv_compute, cv_rate):
    """
    Copy of ``scenario`` with every compute speed and every link rate scaled
    by an independent ``max(0.1, 1 + cv * N(0, 1))`` factor.
    """
    nodes = []
    for node in scenario.nodes:
        factor = max(MIN_FACTOR, 1.0 + cv_compute * rng.standard_normal())
        nodes.append(node._replace(compute=node.compute * factor))
    links = []
    for link in scenario.links:
        factor = max(MIN_FACTOR, 1.0 + cv_rate * rng.standard_normal())
        links.append(LinkProfile(link.source, link.target, link.bandwidth, link_rate(scenario, link) * factor))
    return scenario._replace(nodes=tuple(nodes), links=tuple(links))


def _micro_batch(env, index, resources, service_times, busy, events):
    for stage, resource in enumerate(resources):
        with resource.request() as request:
            yield request
            seconds = service_times[stage]
            if events is not None:
                events.append((START, env.now, stage, index))
            yield env.timeout(seconds)
            busy[stage] += seconds
            if events is not None:
                events.append((FINISH, env.now, stage, index))


def simulate(scenario, plan, b, mode=NOMINAL, cv_compute=0.0, cv_rate=0.0, seed=None, ragged=False,
             record_events=False):
    """
    Runs ``ceil(B / b)`` micro-batches of size ``b``. With ``ragged`` the
    last one carries only the remaining samples. ``perturbed`` mode draws
    fresh compute and rate factors from ``seed`` for this run.
    """
    if mode not in MODES:
        raise ValueError('Unknown mode "{}".'.format(mode))
    violations = check_feasibility(scenario, plan, b, allow_node_reuse=True)
    if violations:
        raise InfeasibleError(violations[0].code, violations[0].message)

    if mode == PERTURBED:
        scenario = perturb_scenario(scenario, np.random.default_rng(seed), cv_compute, cv_rate)

    count = ceil_div(scenario.minibatch, b)
    stages = build_stages(scenario, plan, b)
    nominal = [stage.service_time for stage in stages]
    service_times = [nominal] * count
    remainder = scenario.minibatch - (count - 1) * b
    if ragged and remainder != b:
        service_times[-1] = [stage.service_time for stage in build_stages(scenario, plan, remainder)]

    env = simpy.Environment()
    resources = [simpy.Resource(env, capacity=1) for _ in stages]
    busy = [0.0] * len(stages)
    events = [] if record_events else None
    for index in range(count):
        env.process(_micro_batch(env, index, resources, service_times[index], busy, events))
    env.run()

    makespan = env.now
    logger.debug('Simulated {} micro-batches of {} over {} stages: {:.6g}s.'.format(
        count, b, len(stages), makespan,
    ))
    if events is not None:
        events = tuple(
            SimEvent(event, time, stage, stages[stage].kind, index)
            for event, time, stage, index in sorted(events, key=lambda item: (item[1], item[2], item[3]))
        )
    return SimResult(
        makespan=makespan,
        busy=tuple(busy),
        idle=tuple(makespan - seconds for seconds in busy),
        events=events,
        stages=stages,
        num_micro_batches=count,
    )
