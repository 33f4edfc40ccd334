# -*- coding: utf-8 -*-
import json
import os
import shutil
import tempfile

import numpy as np

from splitpipe.models import CLIENT, EXPLICIT, SERVER, LinkProfile, NodeProfile, Scenario, cumulate_layers
from splitpipe.validators import validate_scenario

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')


def fixture_path(name):
    return os.path.join(FIXTURES, name)


class TempDirMixin(object):

    def setUp(self):
        super(TempDirMixin, self).setUp()
        self.tmpdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmpdir)

    def path(self, name):
        return os.path.join(self.tmpdir, name)

    def write_json(self, name, data):
        with open(self.path(name), 'w') as fobj:
            json.dump(data, fobj)
        return self.path(name)


def layer(fp_work=1e9, bp_work=2e9, act_size=1e6, grad_size=None, opt_state=0.0, params=0.0):
    return {
        'fp_work': fp_work,
        'bp_work': bp_work,
        'act_size': act_size,
        'grad_size': act_size if grad_size is None else grad_size,
        'opt_state': opt_state,
        'params': params,
    }


def node(node_id, kind=SERVER, compute=1e12, memory=1e15, intensity=1.0, init=0.001, bp_threshold=0,
         position=(0.0, 0.0)):
    return NodeProfile(
        id=node_id,
        kind=kind,
        compute=compute,
        intensity=intensity,
        memory=memory,
        tx_power=0.2,
        position=position,
        init_fp=init,
        init_bp=init,
        bp_threshold=bp_threshold,
    )


def mesh_links(servers, clients, rate=1e8, client_servers=None):
    """Fixed-rate links both ways between every pair of servers and from every client to ``client_servers``."""
    links = []
    for a in servers:
        for b in servers:
            if a != b:
                links.append(LinkProfile(a, b, None, rate))
    for client in clients:
        for server in client_servers or servers:
            links.append(LinkProfile(client, server, None, rate))
            links.append(LinkProfile(server, client, None, rate))
    return tuple(links)


def make_scenario(layers=None, servers=None, clients=None, links=None, minibatch=8, max_submodels=2, rate=1e8):
    layers = cumulate_layers(layers or [layer(), layer()])
    clients = clients or [node('c0', kind=CLIENT)]
    servers = servers or [node('s0', compute=2e12), node('s1', compute=2e12)]
    if links is None:
        links = mesh_links([s.id for s in servers], [c.id for c in clients], rate=rate)
    scenario = Scenario(
        layers=layers,
        nodes=tuple(clients) + tuple(servers),
        links=tuple(links),
        topology=EXPLICIT,
        minibatch=minibatch,
        max_submodels=max_submodels,
        pathloss=3.5,
        noise_density=4e-21,
    )
    validate_scenario(scenario)
    return scenario


def random_scenario(seed, servers=3, layers=5, max_submodels=3, minibatch=16, clients=1, tight_memory=False):
    """Small fixed-rate instance with heterogeneous nodes for comparisons against enumeration."""
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(layers):
        fp_work = float(rng.uniform(1e8, 1e9))
        act_size = float(rng.uniform(1e4, 1e6))
        records.append(layer(
            fp_work=fp_work,
            bp_work=2.0 * fp_work,
            act_size=act_size,
            grad_size=float(rng.uniform(0.5, 1.0)) * act_size,
            params=float(rng.uniform(1e4, 1e6)),
        ))
    per_sample = sum(r['act_size'] + r['grad_size'] + r['opt_state'] + r['params'] for r in records)

    def memory():
        if tight_memory:
            return float(rng.uniform(0.3, 1.2)) * minibatch * per_sample
        return 1e15

    client_nodes = [
        node('c{}'.format(i), kind=CLIENT, compute=float(rng.uniform(1e11, 1e12)), memory=memory(),
             init=float(rng.uniform(0, 2e-3)), bp_threshold=int(rng.integers(0, 8)))
        for i in range(clients)
    ]
    server_nodes = [
        node('s{}'.format(i), compute=float(rng.uniform(1e12, 1e13)), memory=memory(),
             init=float(rng.uniform(0, 2e-3)), bp_threshold=int(rng.integers(0, 8)))
        for i in range(servers)
    ]
    ids = [s.id for s in server_nodes]
    links = []
    for a in ids:
        for b in ids:
            if a != b:
                links.append(LinkProfile(a, b, None, float(rng.uniform(1e7, 1e9))))
    for client in client_nodes:
        for server in ids:
            links.append(LinkProfile(client.id, server, None, float(rng.uniform(1e7, 1e9))))
            links.append(LinkProfile(server, client.id, None, float(rng.uniform(1e7, 1e9))))
    return make_scenario(
        layers=records,
        servers=server_nodes,
        clients=client_nodes,
        links=links,
        minibatch=minibatch,
        max_submodels=max_submodels,
    )
