"""Reference infrastructures and evaluation sweeps.

The small infrastructure is a two-datacenter database deployment with 19
infrastructure components and seven replicas; the large one is a seeded
generator with three datacenters, 120 hosts, a random 20-switch topology
and 300 layered infrastructure components (440 components before
instances are added).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .compiler import CompileOptions, create_service_model
from .inference import InferenceInfeasible, service_marginal
from .model import (Component, FaultDependencyGraph, NetworkGraph, QuorumSpec,
                    SystemModel, majority_quorum, or_tree)

# Fault probabilities quoted for the small infrastructure; the remaining
# components draw from Beta(10, 1000) under the supplied seed.
SMALL_FIXED_PRIORS = {"DC1": 0.0092, "DC2": 0.0069, "H8": 0.0084, "H9": 0.0107}


@dataclass
class SweepRecord:
    n: int
    availability: float
    build_time_s: float
    inference_time_s: float
    method: str
    seed: int


CSV_HEADER = "n,availability,build_time_s,inference_time_s,method,seed"


def records_to_csv(records: list[SweepRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        avail = "nan" if math.isnan(r.availability) else repr(r.availability)
        lines.append(f"{r.n},{avail},{r.build_time_s!r},{r.inference_time_s!r},{r.method},{r.seed}")
    return "\n".join(lines) + "\n"


def small_infrastructure(seed: int = 7, replicated: bool = True) -> SystemModel:
    """The two-datacenter database deployment used as the running example.

    Nineteen infrastructure components across two datacenters plus seven
    replicas on hosts H1..H5 and two co-located on H7; clients enter
    through the firewall; majority quorum.  Instances never fail
    intrinsically.
    """
    rng = np.random.default_rng(seed)
    order = ["DC1", "DC2", "Ra1", "Ra2", "Ra3", "FW",
             "N1", "N2", "N3", "N4",
             "H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8", "H9"]
    comps = []
    for cid in order:
        if cid in SMALL_FIXED_PRIORS:
            q = SMALL_FIXED_PRIORS[cid]
        else:
            q = float(rng.beta(10, 1000))
        kind = "infrastructure" if cid.startswith(("DC", "Ra")) else \
            ("network" if cid in ("FW", "N1", "N2", "N3", "N4") else "host")
        comps.append(Component(cid, kind, q))
    for i in range(1, 8):
        comps.append(Component(f"I{i}", "instance", 0.0))

    rack_members = {
        "Ra1": ["FW", "N1", "N2", "H1", "H2", "H3"],
        "Ra2": ["N3", "H4", "H5", "H6"],
        "Ra3": ["N4", "H7", "H8", "H9"],
    }
    fault_edges = [("DC1", "Ra1"), ("DC1", "Ra2"), ("DC2", "Ra3")]
    for rack, members in rack_members.items():
        fault_edges.extend((rack, m) for m in members)

    network = NetworkGraph(
        nodes=["FW", "N1", "N2", "N3", "N4",
               "H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8", "H9"],
        edges=[("FW", "N2"), ("N2", "N1"), ("N2", "N3"), ("N3", "N4"),
               ("N1", "H1"), ("N1", "H2"), ("N1", "H3"),
               ("N3", "H4"), ("N3", "H5"), ("N3", "H6"),
               ("N4", "H7"), ("N4", "H8"), ("N4", "H9")])

    deployment = {"I1": "H1", "I2": "H2", "I3": "H3", "I4": "H4",
                  "I5": "H5", "I6": "H7", "I7": "H7"}

    model = SystemModel(
        components=comps,
        quorum=majority_quorum([f"I{i}" for i in range(1, 8)]),
        fault_graph=FaultDependencyGraph(edges=fault_edges),
        network=network,
        deployment=deployment,
        gateways=["FW"],
        replicated=replicated)
    return model.normalized()


def large_infrastructure(seed: int = 11, n_instances: int = 3,
                         replicated: bool = True) -> SystemModel:
    """Seeded three-datacenter infrastructure with 440 components.

    Each datacenter contributes its root plus 99 layered infrastructure
    components (children fail via an OR over their parents), 40 hosts and
    a share of the 20 network components.  The network is a random
    connected topology (spanning tree over the switches plus extra
    links), hosts hang off one switch of their datacenter, and one switch
    per datacenter acts as gateway.  Component fault probabilities are
    1 - Beta(10000, 1) draws; instances are placed round-robin.
    """
    rng = np.random.default_rng(seed)
    comps: list[Component] = []
    fault_edges: list[tuple[str, str]] = []
    trees = {}

    def add(cid, kind, parents=()):
        parents = [str(p) for p in parents]
        comps.append(Component(cid, kind, 1.0 - float(rng.beta(10000, 1))))
        for p in parents:
            fault_edges.append((p, cid))
        if len(parents) >= 1:
            trees[cid] = or_tree(parents)

    dc_layers: dict[int, list[str]] = {}
    for d in (1, 2, 3):
        root = f"DC{d}"
        add(root, "infrastructure")
        layers = [[root]]
        idx = 1
        for size in (33, 33, 33):
            layer = []
            for _ in range(size):
                cid = f"X{d}_{idx}"
                idx += 1
                n_par = int(rng.integers(1, 3))
                parents = list(rng.choice(layers[-1], size=min(n_par, len(layers[-1])), replace=False))
                add(cid, "infrastructure", parents)
                layer.append(cid)
            layers.append(layer)
        dc_layers[d] = layers[-1]

    switch_dc = {}
    switches = []
    for k in range(1, 21):
        d = (k - 1) % 3 + 1
        cid = f"N{k}"
        n_par = int(rng.integers(1, 3))
        parents = list(rng.choice(dc_layers[d], size=n_par, replace=False))
        add(cid, "network", parents)
        switch_dc[cid] = d
        switches.append(cid)

    hosts = []
    for h in range(1, 121):
        d = (h - 1) // 40 + 1
        cid = f"H{h}"
        n_par = int(rng.integers(1, 3))
        parents = list(rng.choice(dc_layers[d], size=n_par, replace=False))
        add(cid, "host", parents)
        hosts.append(cid)

    # random connected switch fabric: spanning tree plus extra links
    net_edges = []
    shuffled = list(switches)
    rng.shuffle(shuffled)
    for i, s in enumerate(shuffled[1:], start=1):
        net_edges.append((str(rng.choice(shuffled[:i])), s))
    extra = 0
    present = {frozenset(e) for e in net_edges}
    while extra < 6:
        a, b = rng.choice(switches, size=2, replace=False)
        if frozenset((a, b)) not in present:
            present.add(frozenset((a, b)))
            net_edges.append((str(a), str(b)))
            extra += 1
    for cid in hosts:
        d = (int(cid[1:]) - 1) // 40 + 1
        dc_switches = [s for s in switches if switch_dc[s] == d]
        net_edges.append((str(rng.choice(dc_switches)), cid))

    gateways = [next(s for s in switches if switch_dc[s] == d) for d in (1, 2, 3)]

    inst_ids = [f"I{i}" for i in range(1, n_instances + 1)]
    comps.extend(Component(i, "instance", 0.0) for i in inst_ids)

    model = SystemModel(
        components=comps,
        quorum=majority_quorum(inst_ids),
        fault_graph=FaultDependencyGraph(edges=fault_edges, trees=trees),
        network=NetworkGraph(nodes=switches + hosts, edges=net_edges),
        deployment=place_round_robin(n_instances, hosts),
        gateways=gateways,
        replicated=replicated)
    return model.normalized()


def place_round_robin(n: int, hosts) -> dict[str, str]:
    """Deployment of instances I1..In onto the ordered host list, round-robin."""
    hosts = list(hosts)
    if n < 1 or not hosts:
        raise ValueError("need at least one instance and one host")
    return {f"I{i}": hosts[(i - 1) % len(hosts)] for i in range(1, n + 1)}


def with_instances(base: SystemModel, n: int, replicated: bool | None = None,
                   quorum: QuorumSpec | None = None) -> SystemModel:
    """Copy of the model with n fresh round-robin instances and a majority quorum."""
    keep = [c for c in base.components if c.kind != "instance"]
    inst_ids = [f"I{i}" for i in range(1, n + 1)]
    comps = keep + [Component(i, "instance", 0.0) for i in inst_ids]
    hosts = [c.id for c in keep if c.kind == "host"]
    old_instances = set(base.instance_ids())
    edges = [(p, c) for p, c in base.fault_graph.edges
             if p not in old_instances and c not in old_instances]
    trees = {cid: t for cid, t in base.fault_graph.trees.items() if cid not in old_instances}
    model = SystemModel(
        components=comps,
        quorum=quorum or majority_quorum(inst_ids),
        fault_graph=FaultDependencyGraph(edges=edges, trees=trees),
        network=base.network,
        deployment=place_round_robin(n, hosts),
        gateways=list(base.gateways),
        replicated=base.replicated if replicated is None else replicated)
    return model.normalized()


def sweep(base: SystemModel, n_values, kind: str, method: str, seed: int = 0,
          samples: int = 100_000, route_limit: int | None = None,
          gate_mode: str = "auto") -> list[SweepRecord]:
    """Availability/build-time/inference-time sweep over instance counts.

    Per point: regenerate instances with a majority quorum, compile, time
    the build and the inference.  Points where exact inference blows the
    resource budget are recorded with availability nan and an
    "-infeasible" method marker instead of aborting the sweep.
    """
    if kind not in ("redundant", "replicated"):
        raise ValueError(f"unknown service kind {kind!r}")
    records = []
    options = CompileOptions(gate_mode=gate_mode, route_limit=route_limit)
    for n in n_values:
        model = with_instances(base, n, replicated=(kind == "replicated"))
        t0 = time.perf_counter()
        net = create_service_model(model, options)
        t1 = time.perf_counter()
        try:
            result = service_marginal(net, method, samples=samples, seed=seed)
            t2 = time.perf_counter()
            records.append(SweepRecord(n, result.p_working, t1 - t0, t2 - t1, method, seed))
        except InferenceInfeasible:
            t2 = time.perf_counter()
            records.append(SweepRecord(n, float("nan"), t1 - t0, t2 - t1,
                                       f"{method}-infeasible", seed))
    return records
