"""Independent ground truth computed directly on the high-level model.

Never touches the compiled network: worlds (joint intrinsic-fault
assignments) are propagated through the fault trees, reachability is
decided by graph search, and the service verdict follows the same
aggregation semantics the compiled network encodes.  Exhaustive
enumeration covers small models exactly; seeded sampling covers the
rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Gate, SystemModel, quorum_holds, validate

ENUMERATION_LIMIT = 25  # uncertain components; 2^k worlds
_CHUNK = 1 << 20


class OracleError(ValueError):
    pass


class EnumerationLimit(OracleError):
    """Too many uncertain components for exhaustive world enumeration."""


@dataclass
class World:
    """One joint assignment of intrinsic faults, with the propagated result.

    Both maps use True for "faulty".  The effective state is computed
    topologically: a component is down when its intrinsic fault fired or
    its fault tree fires on the parents' effective states.
    """

    intrinsic: dict[str, bool]
    effective: dict[str, bool]


@dataclass
class OracleEstimate:
    value: float
    method: str
    samples: int | None = None
    std_error: float | None = None
    ci95: tuple[float, float] | None = None


class Evaluator:
    """Precompiled world evaluation for one model, vectorized over worlds."""

    def __init__(self, model: SystemModel):
        report = validate(model)
        if report:
            raise OracleError("invalid model: " + "; ".join(str(v) for v in report))
        model = model.normalized()
        self.model = model
        self.comp_ids = [c.id for c in model.components]
        self.col = {cid: i for i, cid in enumerate(self.comp_ids)}
        self.q = np.array([c.q for c in model.components])
        self.uncertain = [i for i, c in enumerate(model.components) if 0.0 < c.q < 1.0]

        parent_map = model.fault_graph.parent_map()
        self.topo = self._topo(parent_map)
        self.trees = {cid: model.fault_graph.tree_for(cid) for cid in self.comp_ids}

        self.adj = model.network.adjacency()
        self.net_cols = [self.col[n] for n in model.network.nodes]
        self.net_ids = list(model.network.nodes)

        self.instances = model.instance_ids()
        self.hosts = [model.deployment[i] for i in self.instances]
        self._reach_cache: dict[bytes, dict[str, set[str]]] = {}

    def _topo(self, parent_map):
        remaining = {cid: len(parent_map.get(cid, [])) for cid in self.comp_ids}
        ready = [cid for cid in self.comp_ids if remaining[cid] == 0]
        order = []
        i = 0
        children: dict[str, list[str]] = {}
        for child, parents in parent_map.items():
            for p in parents:
                children.setdefault(p, []).append(child)
        while i < len(ready):
            cid = ready[i]
            i += 1
            order.append(cid)
            for ch in children.get(cid, []):
                remaining[ch] -= 1
                if remaining[ch] == 0:
                    ready.append(ch)
        if len(order) != len(self.comp_ids):
            raise OracleError("fault dependency graph contains a cycle")
        return order

    def _tree_fires(self, tree: Gate, fault: np.ndarray) -> np.ndarray:
        cols = []
        for a in tree.args:
            if isinstance(a, Gate):
                cols.append(self._tree_fires(a, fault))
            else:
                cols.append(fault[:, self.col[a]])
        stacked = np.stack(cols, axis=1)
        if tree.op == "and":
            return stacked.all(axis=1)
        if tree.op == "or":
            return stacked.any(axis=1)
        return stacked.sum(axis=1) >= tree.vote_k

    def propagate(self, intrinsic: np.ndarray) -> np.ndarray:
        """Effective fault matrix from an intrinsic fault matrix (worlds x comps)."""
        fault = np.array(intrinsic, dtype=bool)
        for cid in self.topo:
            tree = self.trees[cid]
            if tree is not None:
                j = self.col[cid]
                fault[:, j] = fault[:, j] | self._tree_fires(tree, fault)
        return fault

    # -- reachability ---------------------------------------------------------

    def _reach_sets(self, pattern: np.ndarray, sources) -> dict[str, set[str]]:
        """Nodes reachable from each source through working interior nodes.

        ``pattern`` is the fault vector over network nodes.  Endpoints
        are traversable regardless of their own state: a route constrains
        only the components strictly between its endpoints.
        """
        key = pattern.tobytes()
        cached = self._reach_cache.get(key)
        if cached is None:
            cached = {}
            self._reach_cache[key] = cached
        up = {n for n, f in zip(self.net_ids, pattern) if not f}
        for src in sources:
            if src in cached:
                continue
            reached = {src}
            passable = {src}
            stack = [src]
            while stack:
                x = stack.pop()
                for nb in self.adj[x]:
                    if nb not in reached:
                        reached.add(nb)
                    if nb in up and nb not in passable:
                        passable.add(nb)
                        stack.append(nb)
            cached[src] = reached
        return cached

    def _reach_vectors(self, fault: np.ndarray, pairs) -> dict[tuple[str, str], np.ndarray]:
        """Per-pair reachability vectors over all worlds in the fault matrix."""
        patterns, inverse = np.unique(fault[:, self.net_cols], axis=0, return_inverse=True)
        sources = sorted({src for src, _ in pairs})
        per_pattern = {pair: np.zeros(len(patterns), dtype=bool) for pair in pairs}
        for pi, pattern in enumerate(patterns):
            reach = self._reach_sets(pattern, sources)
            for pair in pairs:
                per_pattern[pair][pi] = pair[1] in reach[pair[0]]
        return {pair: vec[inverse] for pair, vec in per_pattern.items()}

    # -- service verdict ------------------------------------------------------

    def service_up(self, fault: np.ndarray) -> np.ndarray:
        """Boolean service verdict per world, given effective fault states."""
        model = self.model
        quorum = model.quorum
        insts = self.instances
        inst_up = {i: ~fault[:, self.col[i]] for i in insts}
        gw_up = {g: ~fault[:, self.col[g]] for g in model.gateways}
        m = fault.shape[0]

        if not model.replicated:
            pairs = sorted({(g, model.deployment[i]) for g in model.gateways for i in insts})
            reach = self._reach_vectors(fault, pairs)
            up = np.zeros(m, dtype=bool)
            for g in model.gateways:
                chans = {i: gw_up[g] & inst_up[i] & reach[(g, model.deployment[i])] for i in insts}
                up |= self._quorum_over(chans, quorum, None)
            return up

        host_pairs = sorted({tuple(sorted((model.deployment[a], model.deployment[b])))
                             for ai, a in enumerate(insts) for b in insts[ai + 1:]})
        gw_pairs = sorted({(g, model.deployment[i]) for g in model.gateways for i in insts})
        reach = self._reach_vectors(fault, sorted(set(host_pairs) | set(gw_pairs)))

        inner = {}
        for ai, a in enumerate(insts):
            for b in insts[ai + 1:]:
                key = tuple(sorted((model.deployment[a], model.deployment[b])))
                ok = inst_up[a] & inst_up[b] & reach[key]
                inner[(a, b)] = ok
                inner[(b, a)] = ok

        k_up = {}
        for i in insts:
            chans = {j: inner[(i, j)] for j in insts if j != i}
            k_up[i] = self._quorum_over(chans, quorum, i)

        up = np.zeros(m, dtype=bool)
        for g in model.gateways:
            for i in insts:
                up |= gw_up[g] & reach[(g, model.deployment[i])] & k_up[i]
        return up

    def _quorum_over(self, chans: dict[str, np.ndarray], quorum, member: str | None) -> np.ndarray:
        """Quorum verdict given per-peer working-channel vectors.

        ``member`` is the initiating instance whose own votes count as
        already contributed (inter-replica aggregation); None for the
        per-gateway direct form.
        """
        some = next(iter(chans.values()))
        if quorum.is_voting:
            got = np.zeros(some.shape, dtype=np.int64)
            for peer, vec in chans.items():
                got += quorum.votes[peer] * vec
            residual = quorum.threshold - (quorum.votes[member] if member else 0)
            return got >= residual
        ok = np.zeros(some.shape, dtype=bool)
        for s in quorum.explicit_sets:
            term = np.ones(some.shape, dtype=bool)
            usable = True
            for p in s:
                if p == member:
                    continue  # own contribution is implied
                if p not in chans:
                    usable = False
                    break
                term &= chans[p]
            if usable:
                ok |= term
        return ok


def evaluate_world(model: SystemModel, intrinsic: dict[str, bool]) -> World:
    """Propagate one intrinsic assignment into effective component states."""
    ev = Evaluator(model)
    row = np.array([[bool(intrinsic.get(cid, False)) for cid in ev.comp_ids]])
    fault = ev.propagate(row)
    eff = {cid: bool(fault[0, ev.col[cid]]) for cid in ev.comp_ids}
    return World(dict(intrinsic), eff)


def service_up(model: SystemModel, world: World | dict[str, bool]) -> bool:
    """Is the service up in this world?

    Accepts a World or a raw intrinsic-fault map (True = intrinsically
    faulty); effective states are derived by fault propagation.
    """
    intrinsic = world.intrinsic if isinstance(world, World) else world
    ev = Evaluator(model)
    row = np.array([[bool(intrinsic.get(cid, False)) for cid in ev.comp_ids]])
    return bool(ev.service_up(ev.propagate(row))[0])


def enumerate_availability(model: SystemModel) -> float:
    """Exact availability by summing over all intrinsic fault combinations."""
    ev = Evaluator(model)
    k = len(ev.uncertain)
    if k > ENUMERATION_LIMIT:
        raise EnumerationLimit(
            f"{k} components with uncertain faults exceeds the enumeration limit of {ENUMERATION_LIMIT}")
    ncomp = len(ev.comp_ids)
    base = np.zeros(ncomp, dtype=bool)
    for i, c in enumerate(ev.model.components):
        if c.q == 1.0:
            base[i] = True
    total = 0.0
    worlds = 1 << k
    for start in range(0, worlds, _CHUNK):
        stop = min(start + _CHUNK, worlds)
        idx = np.arange(start, stop, dtype=np.uint64)
        intrinsic = np.tile(base, (stop - start, 1))
        prob = np.ones(stop - start)
        for bit, ci in enumerate(ev.uncertain):
            fired = ((idx >> np.uint64(bit)) & np.uint64(1)).astype(bool)
            intrinsic[:, ci] = fired
            qi = ev.q[ci]
            prob *= np.where(fired, qi, 1.0 - qi)
        up = ev.service_up(ev.propagate(intrinsic))
        total += float(prob[up].sum())
    return total


def mc_availability(model: SystemModel, samples: int = 100_000,
                    seed: int = 0) -> OracleEstimate:
    """Seeded Monte-Carlo estimate of availability with a 95% interval."""
    if samples < 1:
        raise ValueError("need at least one sample")
    ev = Evaluator(model)
    ncomp = len(ev.comp_ids)
    rng = np.random.default_rng(seed)
    base = np.array([c.q == 1.0 for c in ev.model.components])
    hits = 0
    done = 0
    while done < samples:
        m = min(samples - done, _CHUNK // max(ncomp, 1) + 1)
        intrinsic = np.tile(base, (m, 1))
        if ev.uncertain:
            draws = rng.random((m, len(ev.uncertain)))
            for j, ci in enumerate(ev.uncertain):
                intrinsic[:, ci] = draws[:, j] < ev.q[ci]
        up = ev.service_up(ev.propagate(intrinsic))
        hits += int(np.count_nonzero(up))
        done += m
    p = hits / samples
    se = math.sqrt(max(p * (1 - p), 0.0) / samples)
    ci = (max(p - 1.96 * se, 0.0), min(p + 1.96 * se, 1.0))
    return OracleEstimate(p, "mc", samples=samples, std_error=se, ci95=ci)
