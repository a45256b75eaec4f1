"""Marginal computation on compiled networks.

Exact inference is variable elimination: the network is first simplified
(pass-through nodes merged, constant nodes folded), then an elimination
order is chosen greedily and, if its peak factor would blow the resource
budget, refined by a bounded seeded local search.  Orders whose peak
stays over budget raise InferenceInfeasible instead of exhausting
memory.  Approximate inference is seeded ancestral (forward) sampling,
vectorized over batches of worlds.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass

import numpy as np

from . import cpds as C
from .bn import BayesNet

# Budget for a single intermediate factor.  Sized so that tree-like
# service layers and the inter-replica layer of small clusters (a handful
# of replicas) fit, while the quadratic channel coupling of ten or more
# replicas does not.
DEFAULT_FACTOR_CAP = 2 ** 26

# Ordering itself becomes the bottleneck long before factors do on very
# large networks.
MAX_EXACT_VARS = 20_000

_SEARCH_MOVES = 900

DEFAULT_SAMPLES = 1_000_000
SAMPLE_MEMORY_BUDGET = 512 * 1024 * 1024


class InferenceInfeasible(RuntimeError):
    """Exact inference would exceed the configured resource budget."""

    def __init__(self, needed: int, cap: int):
        self.needed = needed
        self.cap = cap
        super().__init__(
            f"elimination needs a factor of {needed} entries, over the budget of {cap}")


@dataclass
class MarginalResult:
    node: str
    p_fault: float
    p_working: float
    method: str
    samples: int | None = None
    std_error: float | None = None
    ci95: tuple[float, float] | None = None


@dataclass
class _Factor:
    vars: tuple[str, ...]
    arr: np.ndarray


def _ancestors(net: BayesNet, node: str) -> set[str]:
    seen = {node}
    stack = [node]
    while stack:
        for p in net.nodes[stack.pop()].parents:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


# ---------------------------------------------------------------------------
# network simplification: alias pass-through nodes, fold constants

def _simplify(net: BayesNet, scope: set[str]):
    """Alias map (node -> representative) and constant map (node -> state).

    Pass-through nodes (1-input and/or gates, perfect components) merge
    with their parent; deterministic-state nodes become constants and
    fold through downstream gates where the gate semantics allow it.
    """
    alias: dict[str, str] = {}
    const: dict[str, int] = {}

    def rep(v: str) -> str:
        while v in alias:
            v = alias[v]
        return v

    def bind(nid, live, cpd):
        """Final disposition given live (non-const) parents."""
        if isinstance(cpd, C.Prior):
            if cpd.q == 1.0:
                const[nid] = 0
            elif cpd.q == 0.0:
                const[nid] = 1
            return None
        if len(live) == 1 and isinstance(cpd, (C.AndGate, C.OrGate)) :
            alias[nid] = live[0]
            return None
        if len(live) == 1 and isinstance(cpd, C.VoteGate) and cpd.k == 1:
            alias[nid] = live[0]
            return None
        return cpd

    for nid in net.topological_order():
        if nid not in scope:
            continue
        node = net.nodes[nid]
        cpd = node.cpd
        parents = [rep(p) for p in node.parents]
        cvals = {i: const[p] for i, p in enumerate(parents) if p in const}
        live = [p for i, p in enumerate(parents) if i not in cvals]

        if isinstance(cpd, C.Prior):
            bind(nid, [], cpd)
        elif isinstance(cpd, C.NoisyAnd):
            if cvals:
                if cvals[0] == 0:
                    const[nid] = 0
                elif cpd.q == 1.0:
                    const[nid] = 0
                elif cpd.q == 0.0:
                    const[nid] = 1
                # else: behaves like a prior; handled at factor build by slicing
            elif cpd.q == 0.0:
                alias[nid] = parents[0]
            elif cpd.q == 1.0:
                const[nid] = 0
        elif isinstance(cpd, C.AndGate):
            if any(v == 1 for v in cvals.values()):
                const[nid] = 1
            elif not live:
                const[nid] = 0
            else:
                bind(nid, live, C.AndGate(len(live)))
        elif isinstance(cpd, C.OrGate):
            if any(v == 0 for v in cvals.values()):
                const[nid] = 0
            elif not live:
                const[nid] = 1
            else:
                bind(nid, live, C.OrGate(len(live)))
        elif isinstance(cpd, C.VoteGate):
            k = cpd.k - sum(1 for v in cvals.values() if v == 0)
            if k <= 0:
                const[nid] = 0
            elif k > len(live):
                const[nid] = 1
            elif not live:
                const[nid] = 1
            else:
                bind(nid, live, C.VoteGate(k, len(live)))
        elif isinstance(cpd, C.WeightedVote):
            residual = cpd.residual
            live_votes = []
            for i, p in enumerate(parents):
                if i in cvals:
                    if cvals[i] == 1:
                        residual -= cpd.votes[i]
                else:
                    live_votes.append(cpd.votes[i])
            if residual <= 0:
                const[nid] = 1
            elif residual > sum(live_votes):
                const[nid] = 0
            elif len(live) == 1:
                alias[nid] = live[0]
    return alias, const


def _diagonalize(arr: np.ndarray, vars_: list[str]):
    """Merge repeated variables in a factor scope by taking diagonals."""
    while True:
        seen: dict[str, int] = {}
        dup = None
        for i, v in enumerate(vars_):
            if v in seen:
                dup = (seen[v], i)
                break
            seen[v] = i
        if dup is None:
            return arr, vars_
        a, b = dup
        arr = np.diagonal(arr, axis1=a, axis2=b)  # diagonal axis moves last
        order = [i for i in range(len(vars_)) if i not in (a, b)]
        new_vars = [vars_[i] for i in order] + [vars_[a]]
        vars_ = new_vars


def _build_factors(net: BayesNet, scope: set[str], alias, const):
    def rep(v):
        while v in alias:
            v = alias[v]
        return v

    states: dict[str, int] = {}
    factors: list[_Factor] = []
    # topological iteration keeps factor order (and hence float evaluation
    # order) independent of hash randomization
    for nid in net.topological_order():
        if nid not in scope or nid in alias or nid in const:
            continue
        node = net.nodes[nid]
        arr = node.cpd.table()
        vars_ = []
        index: list = []
        for p in node.parents:
            p = rep(p)
            if p in const:
                index.append(const[p])
            else:
                index.append(slice(None))
                vars_.append(p)
        arr = arr[tuple(index)]
        vars_.append(nid)
        arr, vars_ = _diagonalize(arr, vars_)
        for v in vars_:
            states[v] = net.nodes[v].states
        factors.append(_Factor(tuple(vars_), arr))
    return factors, states


# ---------------------------------------------------------------------------
# elimination order

def _build_neighbors(scopes, states):
    nb: dict[str, set[str]] = {v: set() for v in states}
    for sc in scopes:
        for v in sc:
            nb[v].update(sc)
    for v, ns in nb.items():
        ns.discard(v)
    return nb


def _order_peak(order, scopes, states):
    """Peak clique state product along the order, and the peak's clique."""
    nb = _build_neighbors(scopes, states)
    peak = 0
    peak_clique: tuple[str, ...] = ()
    for v in order:
        p = states[v]
        for x in nb[v]:
            p *= states[x]
        if p > peak:
            peak = p
            peak_clique = tuple(sorted((v,) + tuple(nb[v])))
        ns = nb[v]
        for a in ns:
            nb[a].update(ns)
            nb[a].discard(a)
            nb[a].discard(v)
        del nb[v]
    return peak, peak_clique


def _greedy_order(scopes, states, keep: str, mode: str) -> list[str]:
    """Greedy elimination with a lazily invalidated heap.

    mode "weight" minimizes the clique state product, "fill" the number
    of fill edges; ties break deterministically by name.
    """
    neighbors = _build_neighbors(scopes, states)

    def key_of(v):
        if mode == "weight":
            w = states[v]
            for x in neighbors[v]:
                w *= states[x]
            return (w, len(neighbors[v]), v)
        ns = list(neighbors[v])
        fill = 0
        for i, a in enumerate(ns):
            na = neighbors[a]
            for b in ns[i + 1:]:
                if b not in na:
                    fill += 1
        return (fill, len(ns), v)

    remaining = set(neighbors) - {keep}
    version = {v: 0 for v in remaining}
    heap = [(k[0], k[1], k[2], 0) for k in (key_of(v) for v in remaining)]
    heapq.heapify(heap)
    order = []
    while remaining:
        while True:
            k1, k2, v, ver = heapq.heappop(heap)
            if v not in remaining:
                continue
            if ver != version[v]:
                nk = key_of(v)
                heapq.heappush(heap, (nk[0], nk[1], v, version[v]))
                continue
            break
        ns = set(neighbors[v])
        for a in ns:
            neighbors[a].update(ns - {a})
            neighbors[a].discard(v)
        touched = set(ns)
        for a in ns:
            touched.update(neighbors[a])
        for a in touched & remaining:
            version[a] += 1
        order.append(v)
        remaining.discard(v)
        del neighbors[v]
        version.pop(v, None)
    return order


def _choose_order(scopes, states, keep: str, cap: int):
    """Pick an elimination order with peak under the budget, or fail.

    Tier 1 tries two greedy heuristics; tier 2 refines the better one
    with a bounded, seeded local search.  Returns (order, peak).
    """
    candidates = []
    for mode in ("weight", "fill"):
        order = _greedy_order(scopes, states, keep, mode)
        peak, clique = _order_peak(order, scopes, states)
        candidates.append((peak, order, clique))
    peak, order, clique = min(candidates, key=lambda t: t[0])
    if peak <= cap:
        return order, peak
    if peak > cap << 12:
        # hopelessly over budget; local search will not close a 4096x gap
        raise InferenceInfeasible(peak, cap)

    rng = random.Random(20_17)
    cur, cur_peak, cur_clique = list(order), peak, clique
    best, best_peak = cur, cur_peak
    n = len(cur)
    pos = {v: i for i, v in enumerate(cur)}
    for move in range(_SEARCH_MOVES):
        movable = [v for v in cur_clique if v in pos]
        if movable and move % 2 == 0:
            # push a member of the current peak clique somewhere else
            i = pos[movable[rng.randrange(len(movable))]]
        else:
            i = rng.randrange(n)
        j = rng.randrange(n)
        if i == j:
            continue
        cand = list(cur)
        cand.insert(j, cand.pop(i))
        p, cl = _order_peak(cand, scopes, states)
        if p <= cur_peak:
            cur, cur_peak, cur_clique = cand, p, cl
            pos = {v: k for k, v in enumerate(cur)}
            if p < best_peak:
                best, best_peak = cand, p
                if best_peak <= cap // 16:
                    break
    if best_peak <= cap:
        return best, best_peak
    raise InferenceInfeasible(best_peak, cap)


# ---------------------------------------------------------------------------
# exact marginal

def _multiply_and_eliminate(factors: list[_Factor], var: str, states: dict[str, int],
                            cap: int) -> _Factor:
    vars_u = sorted(set().union(*(f.vars for f in factors)))
    shape = tuple(states[v] for v in vars_u)
    entries = math.prod(shape)
    if entries > cap:
        raise InferenceInfeasible(entries, cap)
    axis_of = {v: i for i, v in enumerate(vars_u)}
    if len(factors) == 1:
        out = factors[0].arr
        perm = [axis_of[v] for v in factors[0].vars]
        out = out.transpose(np.argsort(perm))
    else:
        out = np.ones(shape)
        for f in factors:
            axes = [axis_of[v] for v in f.vars]
            order = np.argsort(axes)
            arr = f.arr.transpose(order)
            expand = [shape[i] if i in axes else 1 for i in range(len(vars_u))]
            out *= arr.reshape(expand)
    summed = out.sum(axis=axis_of[var])
    new_vars = tuple(v for v in vars_u if v != var)
    return _Factor(new_vars, summed)


def exact_marginal(net: BayesNet, node: str,
                   max_factor_entries: int = DEFAULT_FACTOR_CAP) -> MarginalResult:
    """Exact marginal of a node by variable elimination over its ancestors."""
    if node not in net.nodes:
        raise KeyError(f"no node {node!r} in the network")
    scope = _ancestors(net, node)
    if len(scope) > MAX_EXACT_VARS:
        raise InferenceInfeasible(len(scope), MAX_EXACT_VARS)

    alias, const = _simplify(net, scope)
    if node in const:
        p_fault = 1.0 if const[node] == 0 else 0.0
        return MarginalResult(node, p_fault, 1.0 - p_fault, "exact")
    target = node
    while target in alias:
        target = alias[target]

    factors, states = _build_factors(net, scope, alias, const)
    for f in factors:
        if f.arr.size > max_factor_entries:
            raise InferenceInfeasible(f.arr.size, max_factor_entries)

    order, _ = _choose_order([f.vars for f in factors], states, target, max_factor_entries)
    for var in order:
        touching = [f for f in factors if var in f.vars]
        rest = [f for f in factors if var not in f.vars]
        factors = rest + [_multiply_and_eliminate(touching, var, states, max_factor_entries)]

    result = np.ones(states[target])
    for f in factors:
        if f.vars == (target,):
            result = result * f.arr
        elif f.vars == ():
            result = result * float(f.arr)
        else:  # pragma: no cover - elimination removes everything else
            raise AssertionError(f"unexpected residual factor over {f.vars}")
    total = result.sum()
    p_fault = float(result[0] / total)
    return MarginalResult(node, p_fault, 1.0 - p_fault, "exact")


# ---------------------------------------------------------------------------
# forward sampling

def _peak_live_width(net: BayesNet, order: list[str], query: str) -> int:
    """Greatest number of simultaneously live sample columns along the order."""
    remaining_uses = {nid: len(net.children[nid]) for nid in net.nodes}
    remaining_uses[query] = remaining_uses.get(query, 0) + 1
    live = 0
    peak = 0
    for nid in order:
        live += 1
        peak = max(peak, live)
        for p in net.nodes[nid].parents:
            remaining_uses[p] -= 1
            if remaining_uses[p] == 0:
                live -= 1
        if remaining_uses[nid] == 0:
            live -= 1
    return max(peak, 1)


def forward_sample_marginal(net: BayesNet, node: str, samples: int = DEFAULT_SAMPLES,
                            seed: int = 0,
                            memory_budget: int = SAMPLE_MEMORY_BUDGET) -> MarginalResult:
    """Ancestral sampling in topological order, deterministic for a given seed.

    Sampling runs in batches sized to the memory budget; parent columns
    are freed as soon as no remaining node needs them.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if node not in net.nodes:
        raise KeyError(f"no node {node!r} in the network")
    order = net.topological_order()
    width = _peak_live_width(net, order, node)
    batch = int(min(samples, max(1024, memory_budget // (width * 2 + 8))))

    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        cols: dict[str, np.ndarray] = {}
        uses = {nid: len(net.children[nid]) for nid in net.nodes}
        uses[node] += 1
        for nid in order:
            n = net.nodes[nid]
            parent_cols = [cols[p] for p in n.parents]
            u = rng.random(m) if n.cpd.stochastic else None
            cols[nid] = n.cpd.sample(parent_cols, u, m)
            for p in n.parents:
                uses[p] -= 1
                if uses[p] == 0:
                    del cols[p]
            if uses[nid] == 0:
                del cols[nid]
        hits += int(np.count_nonzero(cols[node] != 0))
        done += m

    p_working = hits / samples
    p_fault = 1.0 - p_working
    se = math.sqrt(max(p_working * p_fault, 0.0) / samples)
    ci = (max(p_working - 1.96 * se, 0.0), min(p_working + 1.96 * se, 1.0))
    return MarginalResult(node, p_fault, p_working, "forward",
                          samples=samples, std_error=se, ci95=ci)


def availability(net: BayesNet, method: str = "exact", samples: int = DEFAULT_SAMPLES,
                 seed: int = 0, max_factor_entries: int = DEFAULT_FACTOR_CAP) -> float:
    """P(service working) for the designated service node."""
    result = service_marginal(net, method, samples=samples, seed=seed,
                              max_factor_entries=max_factor_entries)
    return result.p_working


def service_marginal(net: BayesNet, method: str = "exact", samples: int = DEFAULT_SAMPLES,
                     seed: int = 0,
                     max_factor_entries: int = DEFAULT_FACTOR_CAP) -> MarginalResult:
    if method == "exact":
        return exact_marginal(net, "S", max_factor_entries=max_factor_entries)
    if method == "forward":
        return forward_sample_marginal(net, "S", samples=samples, seed=seed)
    raise ValueError(f"unknown inference method {method!r}")
