"""High-level description of a redundant or replicated service.

A service model bundles the pieces needed to reason about availability:
the component inventory with intrinsic fault probabilities, the fault
dependency graph (who drags whom down), the communication network, the
placement of service instances onto hosts, the client entry points, and
the fault-tolerance (quorum) rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

KINDS = ("infrastructure", "network", "host", "instance")
NETWORK_KINDS = ("network", "host")


@dataclass(frozen=True)
class Component:
    """An indivisible hardware or software entity.

    ``q`` is the probability of observing the component faulty without
    any external influence (point probability, no time dimension).
    """

    id: str
    kind: str
    q: float = 0.0


@dataclass(frozen=True)
class Gate:
    """A node of a static fault tree: ``and``, ``or`` or ``vote:k``.

    Arguments are either component ids (leaves) or nested gates.  Gate
    semantics act on *fault* states: ``and`` fires when all inputs have
    fired, ``or`` when at least one has, ``vote:k`` when at least ``k``
    have.
    """

    op: str
    args: tuple

    def __post_init__(self):
        if not (self.op in ("and", "or") or self.op.startswith("vote:")):
            raise ValueError(f"unknown gate op {self.op!r}")

    @property
    def vote_k(self) -> int | None:
        if self.op.startswith("vote:"):
            return int(self.op.split(":", 1)[1])
        return None

    def leaves(self) -> list[str]:
        out = []
        for a in self.args:
            if isinstance(a, Gate):
                out.extend(a.leaves())
            else:
                out.append(a)
        return out

    def fires(self, faulty) -> bool:
        """Evaluate the gate given ``faulty``, a set of fault-state component ids."""
        hits = 0
        for a in self.args:
            hit = a.fires(faulty) if isinstance(a, Gate) else a in faulty
            hits += hit
        if self.op == "and":
            return hits == len(self.args)
        if self.op == "or":
            return hits >= 1
        return hits >= self.vote_k


def and_tree(parents) -> Gate:
    return Gate("and", tuple(parents))


def or_tree(parents) -> Gate:
    return Gate("or", tuple(parents))


@dataclass
class FaultDependencyGraph:
    """DAG of fault dependencies with a per-component fault tree.

    ``edges`` are (parent, child) pairs; ``trees`` maps a component id to
    the fault tree describing how its parents' failures propagate to it.
    Components with parents but no declared tree default to an ``and``
    over their parents; root components need no tree.
    """

    edges: list[tuple[str, str]] = field(default_factory=list)
    trees: dict[str, Gate] = field(default_factory=dict)

    def parents(self, cid: str) -> list[str]:
        return [p for p, c in self.edges if c == cid]

    def parent_map(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for p, c in self.edges:
            out.setdefault(c, []).append(p)
        return out

    def tree_for(self, cid: str) -> Gate | None:
        """Effective fault tree for ``cid`` (declared or the default and-tree)."""
        if cid in self.trees:
            return self.trees[cid]
        parents = self.parents(cid)
        if parents:
            return and_tree(parents)
        return None


@dataclass
class NetworkGraph:
    """Communication links between network components and hosts.

    Links are bidirectional; the graph may contain cycles.
    """

    nodes: list[str] = field(default_factory=list)
    edges: list[tuple[str, str]] = field(default_factory=list)

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            if b not in adj.get(a, ()):
                adj.setdefault(a, []).append(b)
            if a not in adj.get(b, ()):
                adj.setdefault(b, []).append(a)
        return adj


@dataclass
class QuorumSpec:
    """Which instance combinations keep the service functional.

    Either an explicit collection of sufficient instance sets, or a
    votes-plus-threshold rule: the service works when the votes of the
    working instances reach ``threshold``.
    """

    explicit_sets: list[frozenset[str]] | None = None
    votes: dict[str, int] | None = None
    threshold: int | None = None

    @classmethod
    def explicit(cls, sets) -> "QuorumSpec":
        return cls(explicit_sets=[frozenset(s) for s in sets])

    @classmethod
    def voting(cls, votes: dict[str, int], threshold: int) -> "QuorumSpec":
        return cls(votes=dict(votes), threshold=threshold)

    @property
    def is_voting(self) -> bool:
        return self.votes is not None


def majority_quorum(instance_ids) -> QuorumSpec:
    ids = list(instance_ids)
    return QuorumSpec.voting({i: 1 for i in ids}, len(ids) // 2 + 1)


def quorum_holds(quorum: QuorumSpec, up_instances) -> bool:
    """True when the set of working instances satisfies the quorum rule."""
    up = set(up_instances)
    if quorum.is_voting:
        return sum(v for i, v in quorum.votes.items() if i in up) >= quorum.threshold
    return any(s <= up for s in quorum.explicit_sets)


@dataclass
class SystemModel:
    """Complete high-level description of a redundant or replicated service."""

    components: list[Component]
    quorum: QuorumSpec
    fault_graph: FaultDependencyGraph
    network: NetworkGraph
    deployment: dict[str, str]
    gateways: list[str]
    replicated: bool = False

    def component_map(self) -> dict[str, Component]:
        return {c.id: c for c in self.components}

    def instances(self) -> list[Component]:
        return [c for c in self.components if c.kind == "instance"]

    def instance_ids(self) -> list[str]:
        return [c.id for c in self.components if c.kind == "instance"]

    def normalized(self) -> "SystemModel":
        """Copy with the host-to-instance fault edges inserted where missing."""
        edges = list(self.fault_graph.edges)
        present = set(edges)
        for inst in self.instance_ids():
            host = self.deployment.get(inst)
            if host is not None and (host, inst) not in present:
                edges.append((host, inst))
        fg = FaultDependencyGraph(edges=edges, trees=dict(self.fault_graph.trees))
        return replace(self, fault_graph=fg)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def _fault_cycle(edges, ids) -> list[str] | None:
    """Return the ids of one strongly connected cycle, or None if acyclic."""
    adj: dict[str, list[str]] = {i: [] for i in ids}
    for p, c in edges:
        if p in adj and c in adj:
            adj[p].append(c)
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node):
        state[node] = 1
        stack.append(node)
        for nxt in adj[node]:
            if state.get(nxt, 0) == 1:
                return stack[stack.index(nxt):]
            if state.get(nxt, 0) == 0:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        state[node] = 2
        return None

    for n in adj:
        if state.get(n, 0) == 0:
            found = visit(n)
            if found:
                return found
    return None


def validate(model: SystemModel) -> list[Violation]:
    """Check every structural invariant; an empty report means the model is valid.

    Violations are data, not exceptions: each carries the identity of the
    offending component, edge or field.
    """
    report: list[Violation] = []
    model = model.normalized()

    ids = [c.id for c in model.components]
    seen = set()
    for cid in ids:
        if cid in seen:
            report.append(Violation("duplicate-id", f"component id {cid!r} declared twice"))
        seen.add(cid)
    comp = model.component_map()

    for c in model.components:
        if c.kind not in KINDS:
            report.append(Violation("bad-kind", f"component {c.id!r} has unknown kind {c.kind!r}"))
        if not (0.0 <= c.q <= 1.0):
            report.append(Violation("bad-probability", f"component {c.id!r} has q={c.q} outside [0,1]"))

    # fault dependency graph
    for p, c in model.fault_graph.edges:
        for end in (p, c):
            if end not in comp:
                report.append(Violation("unknown-component", f"fault edge ({p},{c}) references undeclared {end!r}"))
    cycle = _fault_cycle(model.fault_graph.edges, set(comp))
    if cycle:
        report.append(Violation("fault-cycle", "fault dependencies form a cycle: " + " -> ".join(cycle + cycle[:1])))

    parent_map = model.fault_graph.parent_map()
    for cid, tree in model.fault_graph.trees.items():
        if cid not in comp:
            report.append(Violation("unknown-component", f"fault tree declared for undeclared component {cid!r}"))
            continue
        leaves = tree.leaves()
        for leaf in leaves:
            if leaf not in comp:
                report.append(Violation("unknown-component", f"fault tree of {cid!r} references undeclared {leaf!r}"))
        if set(leaves) != set(parent_map.get(cid, [])):
            report.append(Violation(
                "tree-parent-mismatch",
                f"fault tree leaves of {cid!r} ({sorted(set(leaves))}) differ from its parents "
                f"({sorted(set(parent_map.get(cid, [])))})"))
        for gate in _walk_gates(tree):
            k = gate.vote_k
            if not gate.args:
                report.append(Violation("empty-gate", f"fault tree of {cid!r} contains a gate with no inputs"))
            elif k is not None and not (1 <= k <= len(gate.args)):
                report.append(Violation("bad-vote", f"fault tree of {cid!r} has vote:{k} over {len(gate.args)} inputs"))

    # network graph
    net_nodes = set(model.network.nodes)
    for n in model.network.nodes:
        if n not in comp:
            report.append(Violation("unknown-component", f"network node {n!r} is not a declared component"))
        elif comp[n].kind not in NETWORK_KINDS:
            report.append(Violation("bad-network-node", f"network node {n!r} has kind {comp[n].kind!r}, expected network or host"))
    for a, b in model.network.edges:
        for end in (a, b):
            if end not in net_nodes:
                report.append(Violation("unknown-network-node", f"network edge ({a},{b}) references non-node {end!r}"))

    # deployment
    inst_ids = model.instance_ids()
    for inst in inst_ids:
        host = model.deployment.get(inst)
        if host is None:
            report.append(Violation("missing-deployment", f"instance {inst!r} has no host assignment"))
        elif host not in comp or comp[host].kind != "host":
            report.append(Violation("bad-deployment", f"instance {inst!r} is deployed on {host!r}, which is not a host"))
        elif host not in net_nodes:
            report.append(Violation("bad-deployment", f"host {host!r} of instance {inst!r} is not a network node"))
    for inst in model.deployment:
        if inst not in comp or comp[inst].kind != "instance":
            report.append(Violation("bad-deployment", f"deployment maps {inst!r}, which is not an instance"))
    for inst in inst_ids:
        host = model.deployment.get(inst)
        parents = parent_map.get(inst, [])
        if host is not None and set(parents) != {host}:
            report.append(Violation(
                "instance-parent", f"instance {inst!r} must have exactly its host {host!r} as fault parent, got {sorted(parents)}"))

    # gateways
    if not model.gateways:
        report.append(Violation("no-gateway", "the gateway set is empty; clients have no entry point"))
    for g in model.gateways:
        if g not in net_nodes:
            report.append(Violation("bad-gateway", f"gateway {g!r} is not a network node"))

    # quorum
    q = model.quorum
    inst_set = set(inst_ids)
    if q.is_voting:
        if set(q.votes) != inst_set:
            report.append(Violation("bad-quorum", f"vote map covers {sorted(q.votes)} but instances are {sorted(inst_set)}"))
        if any(v <= 0 for v in q.votes.values()):
            report.append(Violation("bad-quorum", "instance votes must be positive"))
        total = sum(q.votes.values())
        if q.threshold is None or not (0 < q.threshold <= total):
            report.append(Violation("bad-quorum", f"threshold {q.threshold} outside (0, {total}]"))
    elif q.explicit_sets is not None:
        if not q.explicit_sets:
            report.append(Violation("bad-quorum", "explicit quorum has no member sets"))
        for s in q.explicit_sets:
            if not s:
                report.append(Violation("bad-quorum", "explicit quorum contains an empty set"))
            elif not s <= inst_set:
                report.append(Violation("bad-quorum", f"quorum set {sorted(s)} references non-instances"))
    else:
        report.append(Violation("bad-quorum", "quorum has neither explicit sets nor votes"))

    if model.replicated and len(inst_ids) < 2:
        report.append(Violation("too-few-instances", f"replicated service needs at least 2 instances, got {len(inst_ids)}"))

    return report


def _walk_gates(tree: Gate):
    yield tree
    for a in tree.args:
        if isinstance(a, Gate):
            yield from _walk_gates(a)


def explicit_from_voting(quorum: QuorumSpec) -> QuorumSpec:
    """Enumerate all instance subsets whose vote sum reaches the threshold.

    Only sensible for small instance counts; used for cross-checking the
    two quorum forms against each other.
    """
    assert quorum.is_voting
    ids = list(quorum.votes)
    sets = []
    for r in range(1, len(ids) + 1):
        for combo in itertools.combinations(ids, r):
            if sum(quorum.votes[i] for i in combo) >= quorum.threshold:
                sets.append(frozenset(combo))
    return QuorumSpec.explicit(sets)
