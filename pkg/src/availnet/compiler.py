"""Translate a SystemModel into a Bayesian network.

Three stages: the fault dependency graph (components and their fault
trees), communication channels over enumerated network routes, then the
service layer — per-gateway aggregation for redundant services, or
inter-instance channels plus per-instance aggregation for replicated
ones.  The marginal of node "S" on the result is the service
availability.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx

from . import cpds
from .bn import BayesNet
from .cpds import GateSpec, TableCpd, expand_scalable
from .model import Gate, NetworkGraph, QuorumSpec, SystemModel, quorum_holds, validate

SERVICE_NODE = "S"


class InvalidModelError(ValueError):
    """Raised when compiling a model that fails validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report))


@dataclass
class CompileOptions:
    """Knobs controlling the compiled network's layout.

    gate_mode: "auto" picks dense tables for small gates and chain
    decompositions for large ones; "dense"/"scalable" force one layout
    (dense still falls back to chains above dense_cap, which bounds
    table memory).  route_limit truncates route enumeration per channel.
    """

    gate_mode: str = "auto"
    dense_cap: int = 2 ** 20
    auto_dense_max_arity: int = 3
    route_limit: int | None = None

    def __post_init__(self):
        if self.gate_mode not in ("auto", "dense", "scalable"):
            raise ValueError(f"unknown gate mode {self.gate_mode!r}")


@dataclass
class Route:
    """A simple path through the network, interior components only."""

    components: tuple[str, ...]
    id: str | None = None


@dataclass
class ChannelRef:
    """Compiled channel: its node, the two endpoint cause nodes, its routes."""

    node: str
    endpoints: tuple[str, str]
    routes: list[str]


def comp_node(cid: str) -> str:
    return f"comp:{cid}"


def enumerate_routes(network: NetworkGraph, src: str, dst: str,
                     limit: int | None = None) -> list[Route]:
    """All simple paths between two network nodes, as interior tuples.

    Deterministically ordered shortest-first, ties broken
    lexicographically, truncated to ``limit`` when set.  ``src == dst``
    yields the single empty route.
    """
    return [Route(r) for r in RouteCache(network, limit).interiors(src, dst)]


class RouteCache:
    """Route enumeration with memoization shared across the channels of one compile.

    Degree-one endpoints (typically hosts hanging off one switch) are
    contracted onto their neighbor so that the expensive path search is
    cached at the switch level.
    """

    def __init__(self, network: NetworkGraph, limit: int | None):
        self.limit = limit
        node_set = set(network.nodes)
        for a, b in network.edges:
            if a not in node_set or b not in node_set:
                raise ValueError(f"network edge ({a},{b}) references unknown node")
        self.graph = nx.Graph()
        self.graph.add_nodes_from(network.nodes)
        self.graph.add_edges_from(network.edges)
        self._memo: dict[tuple[str, str], list[tuple[str, ...]]] = {}

    def interiors(self, src: str, dst: str) -> list[tuple[str, ...]]:
        for end in (src, dst):
            if end not in self.graph:
                raise ValueError(f"route endpoint {end!r} is not a network node")
        return self._interiors(src, dst)

    def _interiors(self, src, dst):
        key = (src, dst)
        if key in self._memo:
            return self._memo[key]
        result = self._contract(src, dst)
        self._memo[key] = result
        return result

    def _contract(self, src, dst):
        """Peel degree-one endpoints so path search runs between interior hubs.

        A path can never pass through a degree-one node, so the pendant
        hop is a forced prefix/suffix of every route; contraction also
        lets all channels of one host share the search cached at its
        switch.
        """
        prefix: list[str] = []
        suffix: list[str] = []
        seen = {src, dst}
        while src != dst and self.graph.degree(src) == 1:
            nbr = next(iter(self.graph[src]))
            if nbr == dst:
                return [tuple(prefix + list(reversed(suffix)))]
            if nbr in seen:
                return []  # pendant pocket with no way out
            prefix.append(nbr)
            seen.add(nbr)
            src = nbr
        while src != dst and self.graph.degree(dst) == 1:
            nbr = next(iter(self.graph[dst]))
            if nbr == src:
                return [tuple(prefix + list(reversed(suffix)))]
            if nbr in seen:
                return []
            suffix.append(nbr)
            seen.add(nbr)
            dst = nbr
        if src == dst:
            return [tuple(prefix + list(reversed(suffix)))]
        core = self._memo.get((src, dst))
        if core is None:
            core = self._search(src, dst)
            self._memo[(src, dst)] = core
        tail = tuple(reversed(suffix))
        head = tuple(prefix)
        result = [head + r + tail for r in core]
        if self.limit is not None:
            result = result[: self.limit]
        return result

    def _search(self, src, dst):
        if self.limit is None:
            paths = nx.all_simple_paths(self.graph, src, dst)
            interiors = [tuple(p[1:-1]) for p in paths]
            interiors.sort(key=lambda r: (len(r), r))
            return interiors
        # shortest_simple_paths yields by nondecreasing length; sort each
        # length group lexicographically before truncating
        out: list[tuple[str, ...]] = []
        group: list[tuple[str, ...]] = []
        group_len = None
        try:
            for p in nx.shortest_simple_paths(self.graph, src, dst):
                interior = tuple(p[1:-1])
                if group_len is None or len(interior) == group_len:
                    group.append(interior)
                    group_len = len(interior)
                else:
                    out.extend(sorted(group))
                    group = [interior]
                    group_len = len(interior)
                if len(out) >= self.limit:
                    break
        except nx.NetworkXNoPath:
            return []
        out.extend(sorted(group))
        return out[: self.limit]


class _Build:
    """Mutable state shared by the compilation stages of one model."""

    def __init__(self, model: SystemModel, options: CompileOptions):
        self.model = model
        self.options = options
        self.net = BayesNet()
        self.routes = RouteCache(model.network, options.route_limit)
        self.route_nodes: dict[frozenset, str] = {}

    def emit_gate(self, node_id: str, spec: GateSpec, parents: list[str]) -> str:
        """Add a deterministic gate as a dense table or a chain decomposition."""
        opts = self.options
        if spec.n == 0:
            # degenerate gates: an AND over nothing fires unconditionally
            # (a channel without routes), an OR over nothing never does
            self.net.attach(node_id, [], cpds.Prior(1.0 if spec.kind == "and" else 0.0))
            return node_id
        dense_obj = None
        if opts.gate_mode == "scalable":
            use_dense = spec.n == 1
        else:
            dense_obj = spec.dense()
            if opts.gate_mode == "dense":
                use_dense = dense_obj.table_entries <= opts.dense_cap
            else:
                use_dense = spec.n <= opts.auto_dense_max_arity
        if use_dense:
            self.net.attach(node_id, parents, dense_obj or spec.dense())
        else:
            for sub in expand_scalable(spec, node_id, parents):
                self.net.attach(sub.id, sub.parents, sub.cpd)
        return node_id

    def emit_table(self, node_id: str, parents: list[str], rows) -> str:
        cpd = TableCpd(rows, (2,) * len(parents))
        if cpd.table_entries > self.options.dense_cap:
            raise InvalidModelError([
                f"explicit quorum over {len(parents)} channels needs a table of "
                f"{cpd.table_entries} entries (cap {self.options.dense_cap}); use a voting quorum"])
        self.net.attach(node_id, parents, cpd)
        return node_id

    # -- stage 1: fault dependency graph ------------------------------------

    def fault_graph(self) -> None:
        model = self.model
        comp = model.component_map()
        fg = model.fault_graph
        parent_map = fg.parent_map()

        order = self._fault_topo(comp, parent_map)
        for cid in order:
            c = comp[cid]
            parents = parent_map.get(cid, [])
            if not parents:
                self.net.attach(comp_node(cid), [], cpds.Prior(c.q))
                continue
            if c.kind == "instance":
                # validated: exactly the deployment host as parent
                self.net.attach(comp_node(cid), [comp_node(parents[0])], cpds.NoisyAnd(c.q))
                continue
            tree = fg.tree_for(cid)
            top = self._emit_tree(f"gate:{cid}", tree)
            self.net.attach(comp_node(cid), [top], cpds.NoisyAnd(c.q))

    def _fault_topo(self, comp, parent_map):
        remaining = {cid: len(parent_map.get(cid, [])) for cid in comp}
        ready = [cid for cid in comp if remaining[cid] == 0]
        children: dict[str, list[str]] = {}
        for child, parents in parent_map.items():
            for p in parents:
                children.setdefault(p, []).append(child)
        order = []
        i = 0
        while i < len(ready):
            cid = ready[i]
            i += 1
            order.append(cid)
            for ch in children.get(cid, []):
                remaining[ch] -= 1
                if remaining[ch] == 0:
                    ready.append(ch)
        if len(order) != len(comp):
            raise InvalidModelError(["fault dependency graph contains a cycle"])
        return order

    def _emit_tree(self, node_id: str, tree: Gate) -> str:
        """Emit gate nodes for a fault tree bottom-up; returns the top node id."""
        parents = []
        for idx, arg in enumerate(tree.args):
            if isinstance(arg, Gate):
                parents.append(self._emit_tree(f"{node_id}.{idx}", arg))
            else:
                parents.append(comp_node(arg))
        if tree.op == "and":
            spec = GateSpec("and", len(parents))
        elif tree.op == "or":
            spec = GateSpec("or", len(parents))
        else:
            spec = GateSpec("kofn", len(parents), k=tree.vote_k)
        return self.emit_gate(node_id, spec, parents)

    # -- stage 2: channels ---------------------------------------------------

    def route_node(self, interior: tuple[str, ...]) -> str:
        key = frozenset(interior)
        node = self.route_nodes.get(key)
        if node is None:
            node = f"route:R{len(self.route_nodes) + 1}"
            self.route_nodes[key] = node
            self.emit_gate(node, GateSpec("or", len(interior)), [comp_node(c) for c in interior])
        return node

    def channel(self, src: str, dst: str, x_src: str, x_dst: str, label: str) -> ChannelRef:
        """Channel between two network endpoints with explicit cause nodes.

        The channel fails when either cause fails or no route survives.
        Route nodes are shared across channels with the same interior.
        """
        interiors = self.routes.interiors(src, dst)
        route_ids = []
        for interior in interiors:
            rid = self.route_node(interior)
            if rid not in route_ids:
                route_ids.append(rid)
        and_id = self.emit_gate(f"and:{label}", GateSpec("and", len(route_ids)), route_ids)
        chan_id = f"chan:{label}"
        self.net.attach(chan_id, [and_id, x_src, x_dst], cpds.OrGate(3))
        return ChannelRef(chan_id, (x_src, x_dst), route_ids)

    # -- stage 3: service layer ----------------------------------------------

    def quorum_gate(self, node_id: str, channels: list[str], peers: list[str],
                    own_votes: int, explicit_member: str | None) -> str:
        """Aggregation node: do the working channels satisfy the quorum?

        ``peers`` names the instance behind each channel.  Voting quorums
        compile to a fault-counting gate (unit votes) or a weighted-vote
        rule; explicit path-set quorums are built row by row from
        quorum_holds, with ``explicit_member`` counted as already working.
        """
        q = self.model.quorum
        n = len(channels)
        if q.is_voting:
            peer_votes = [q.votes[p] for p in peers]
            residual = q.threshold - own_votes
            if residual <= 0:
                # the member's own votes already satisfy the threshold
                self.net.attach(node_id, [], cpds.Prior(0.0))
                return node_id
            if residual > sum(peer_votes):
                self.net.attach(node_id, [], cpds.Prior(1.0))
                return node_id
            if all(v == 1 for v in peer_votes):
                # fails once n - residual + 1 channels are faulty
                return self.emit_gate(node_id, GateSpec("kofn", n, k=n - residual + 1), channels)
            spec = GateSpec("weighted", n, votes=tuple(peer_votes),
                            own_votes=own_votes, threshold=q.threshold)
            return self.emit_gate(node_id, spec, channels)

        rows = []
        base = {explicit_member} if explicit_member else set()
        for combo in itertools.product((0, 1), repeat=n):
            up = base | {p for p, state in zip(peers, combo) if state == 1}
            ok = quorum_holds(q, up)
            rows.append([0.0, 1.0] if ok else [1.0, 0.0])
        return self.emit_table(node_id, channels, rows)

    def redundant(self) -> None:
        model = self.model
        instances = model.instance_ids()
        k_nodes = []
        for gi, g in enumerate(model.gateways, start=1):
            chans = []
            for inst in instances:
                ref = self.channel(g, model.deployment[inst],
                                   comp_node(g), comp_node(inst), f"{g}-{inst}")
                chans.append(ref.node)
            kid = f"K:{gi}"
            self.quorum_gate(kid, chans, instances, 0, None)
            k_nodes.append(kid)
        self.emit_gate(SERVICE_NODE, GateSpec("and", len(k_nodes)), k_nodes)

    def replicated(self) -> None:
        model = self.model
        instances = model.instance_ids()
        votes = model.quorum.votes if model.quorum.is_voting else None

        chan_of: dict[tuple[str, str], str] = {}
        for a, b in itertools.combinations(instances, 2):
            ref = self.channel(model.deployment[a], model.deployment[b],
                               comp_node(a), comp_node(b), f"{a}-{b}")
            chan_of[(a, b)] = ref.node
            chan_of[(b, a)] = ref.node

        k_of: dict[str, str] = {}
        for idx, inst in enumerate(instances, start=1):
            peers = [j for j in instances if j != inst]
            chans = [chan_of[(inst, j)] for j in peers]
            kid = f"K:{idx}"
            own = votes[inst] if votes else 0
            self.quorum_gate(kid, chans, peers, own, inst)
            k_of[inst] = kid

        gateway_chans = []
        for g in model.gateways:
            for inst in instances:
                ref = self.channel(g, model.deployment[inst],
                                   comp_node(g), k_of[inst], f"{g}-{inst}")
                gateway_chans.append(ref.node)
        self.emit_gate(SERVICE_NODE, GateSpec("and", len(gateway_chans)), gateway_chans)


def create_fault_graph(model: SystemModel,
                       options: CompileOptions | None = None) -> BayesNet:
    """Compile only the fault dependency graph stage into a fresh network."""
    build = _Build(model.normalized(), options or CompileOptions())
    build.fault_graph()
    return build.net


def create_service_model(model: SystemModel,
                         options: CompileOptions | None = None) -> BayesNet:
    """Full translation; the result's node "S" carries the service availability.

    Raises InvalidModelError when the model fails validation.
    """
    report = validate(model)
    if report:
        raise InvalidModelError(report)
    model = model.normalized()
    build = _Build(model, options or CompileOptions())
    build.fault_graph()
    if model.replicated:
        build.replicated()
    else:
        build.redundant()
    build.net.check_consistent()
    return build.net


def _count(net: BayesNet, prefix: str) -> int:
    """Nodes under a namespace, excluding chain-expansion helpers (#...)."""
    return sum(1 for nid in net.nodes if nid.startswith(prefix) and "#" not in nid)


def channel_count(net: BayesNet) -> int:
    return _count(net, "chan:")


def route_count(net: BayesNet) -> int:
    return _count(net, "route:")


def k_count(net: BayesNet) -> int:
    return _count(net, "K:")
