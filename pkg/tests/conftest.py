import itertools
import random

import pytest

from availnet import (Component, FaultDependencyGraph, Gate, NetworkGraph,
                      QuorumSpec, SystemModel, small_infrastructure)


@pytest.fixture
def small_model():
    return small_infrastructure(7)


@pytest.fixture
def small_redundant():
    return small_infrastructure(7, replicated=False)


def chain_model(gateway_q=0.01, host_q=0.1, instance_q=0.0):
    """Gateway - host - instance in a line; read-one redundant service."""
    return SystemModel(
        components=[Component("G", "network", gateway_q),
                    Component("H", "host", host_q),
                    Component("I1", "instance", instance_q)],
        quorum=QuorumSpec.voting({"I1": 1}, 1),
        fault_graph=FaultDependencyGraph(),
        network=NetworkGraph(nodes=["G", "H"], edges=[("G", "H")]),
        deployment={"I1": "H"},
        gateways=["G"],
        replicated=False)


def triple_replica_model(host_q=0.1):
    """Three replicas on independent hosts behind one perfect switch, majority."""
    comps = [Component("SW", "network", 0.0)]
    comps += [Component(f"H{i}", "host", host_q) for i in (1, 2, 3)]
    comps += [Component(f"I{i}", "instance", 0.0) for i in (1, 2, 3)]
    return SystemModel(
        components=comps,
        quorum=QuorumSpec.voting({f"I{i}": 1 for i in (1, 2, 3)}, 2),
        fault_graph=FaultDependencyGraph(),
        network=NetworkGraph(nodes=["SW", "H1", "H2", "H3"],
                             edges=[("SW", "H1"), ("SW", "H2"), ("SW", "H3")]),
        deployment={f"I{i}": f"H{i}" for i in (1, 2, 3)},
        gateways=["SW"],
        replicated=True)


def random_model(rng: random.Random, max_uncertain: int = 10) -> SystemModel:
    """Random valid model: mixed quorums, odd placements, possible partitions."""
    n_hosts = rng.randint(1, 4)
    n_sw = rng.randint(1, 3)
    hosts = [f"h{i}" for i in range(n_hosts)]
    sws = [f"sw{i}" for i in range(n_sw)]
    net_nodes = sws + hosts
    edges = []
    for i, x in enumerate(net_nodes[1:], start=1):
        if rng.random() < 0.92:  # occasionally leave a node unreachable
            edges.append((net_nodes[rng.randrange(i)], x))
    for _ in range(rng.randint(0, 3)):
        a, b = rng.sample(net_nodes, 2)
        if (a, b) not in edges and (b, a) not in edges:
            edges.append((a, b))

    extra = [f"x{i}" for i in range(rng.randint(0, 3))]
    fault_edges = []
    trees = {}
    for i, x in enumerate(extra[1:], start=1):
        if rng.random() < 0.5:
            fault_edges.append((extra[rng.randrange(i)], x))
    for t in net_nodes:
        if extra and rng.random() < 0.7:
            parents = rng.sample(extra, rng.randint(1, min(2, len(extra))))
            fault_edges.extend((p, t) for p in parents)
            if len(parents) >= 2 and rng.random() < 0.5:
                trees[t] = Gate(rng.choice(["and", "or", "vote:1", "vote:2"]), tuple(parents))

    n_inst = rng.randint(2, 5)
    insts = [f"i{k}" for k in range(n_inst)]
    deployment = {i: rng.choice(hosts) for i in insts}

    comps = []
    used = 0
    for cid in extra + sws + hosts:
        kind = "infrastructure" if cid.startswith("x") else (
            "network" if cid.startswith("sw") else "host")
        if used < max_uncertain and rng.random() < 0.8:
            q = rng.uniform(0.02, 0.5)
            used += 1
        else:
            q = 1.0 if rng.random() < 0.03 else 0.0
        comps.append(Component(cid, kind, q))
    for i in insts:
        if used < max_uncertain and rng.random() < 0.3:
            q = rng.uniform(0.01, 0.3)
            used += 1
        else:
            q = 0.0
        comps.append(Component(i, "instance", q))

    style = rng.choice(["majority", "readone", "writeall", "weighted", "explicit"])
    if style == "explicit":
        all_sets = []
        for r in range(1, n_inst + 1):
            all_sets.extend(itertools.combinations(insts, r))
        quorum = QuorumSpec.explicit(rng.sample(all_sets, rng.randint(1, min(5, len(all_sets)))))
    else:
        votes = {i: (rng.randint(1, 3) if style == "weighted" else 1) for i in insts}
        total = sum(votes.values())
        t = {"majority": total // 2 + 1, "readone": 1, "writeall": total,
             "weighted": rng.randint(1, total)}[style]
        quorum = QuorumSpec.voting(votes, t)

    return SystemModel(
        components=comps, quorum=quorum,
        fault_graph=FaultDependencyGraph(edges=fault_edges, trees=trees),
        network=NetworkGraph(nodes=net_nodes, edges=edges),
        deployment=deployment,
        gateways=rng.sample(net_nodes, rng.randint(1, 2)),
        replicated=rng.random() < 0.5)
