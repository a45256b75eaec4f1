"""Conditional probability distributions for compiled availability networks.

Every node is binary with states F (index 0, faulty) and T (index 1,
working), except the auxiliary counter nodes used by the scalable gate
decompositions, whose states are capped counts 0..cap.

A Cpd object carries the rule, the parent state-space sizes and the child
state count.  It can materialize the dense table (for exact inference and
text dumps) and evaluate itself vectorized over sample columns (for
forward sampling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

F, T = 0, 1


class Cpd:
    """Base class; subclasses define the rule."""

    parent_states: tuple[int, ...] = ()
    child_states: int = 2
    stochastic: bool = False

    @property
    def arity(self) -> int:
        return len(self.parent_states)

    @property
    def table_entries(self) -> int:
        n = self.child_states
        for s in self.parent_states:
            n *= s
        return n

    def table(self) -> np.ndarray:
        """Dense table, axes (parent_1, ..., parent_n, child)."""
        raise NotImplementedError

    def sample(self, parent_cols: list[np.ndarray], u: np.ndarray | None, n: int) -> np.ndarray:
        """Vectorized child states given parent state columns.

        ``u`` is a column of uniform(0,1) draws, supplied only when the
        rule is stochastic; ``n`` is the column length.
        """
        raise NotImplementedError

    def state_dtype(self):
        return np.uint8 if self.child_states <= 256 else np.uint16

    def _grids(self):
        return np.indices(self.parent_states)

    def _binary_table(self, fault: np.ndarray) -> np.ndarray:
        """Table from a parent-grid indicator of P(child=F)==1."""
        t = np.zeros(self.parent_states + (2,))
        f = fault.astype(float)
        t[..., F] = f
        t[..., T] = 1.0 - f
        return t


@dataclass
class Prior(Cpd):
    """Root node: faulty with probability q."""

    q: float

    def __post_init__(self):
        if not (0.0 <= self.q <= 1.0):
            raise ValueError(f"prior probability {self.q} outside [0,1]")
        self.parent_states = ()
        self.stochastic = 0.0 < self.q < 1.0

    def table(self) -> np.ndarray:
        return np.array([self.q, 1.0 - self.q])

    def sample(self, parent_cols, u, n):
        if not self.stochastic:
            state = F if self.q == 1.0 else T
            return np.full(n, state, dtype=np.uint8)
        return (u >= self.q).astype(np.uint8)


@dataclass
class NoisyAnd(Cpd):
    """Component model: certain failure if the cause fires, else intrinsic q."""

    q: float

    def __post_init__(self):
        if not (0.0 <= self.q <= 1.0):
            raise ValueError(f"intrinsic probability {self.q} outside [0,1]")
        self.parent_states = (2,)
        self.stochastic = 0.0 < self.q < 1.0

    def table(self) -> np.ndarray:
        return np.array([[1.0, 0.0], [self.q, 1.0 - self.q]])

    def sample(self, parent_cols, u, n):
        gate = parent_cols[0]
        if not self.stochastic:
            intrinsic = F if self.q == 1.0 else T
            return np.where(gate == F, F, intrinsic).astype(np.uint8)
        return np.where(gate == F, F, (u >= self.q)).astype(np.uint8)


@dataclass
class AndGate(Cpd):
    """Fires (F) only when every parent is faulty."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("and gate needs at least one input")
        self.parent_states = (2,) * self.n

    def table(self) -> np.ndarray:
        grids = self._grids()
        fault = np.ones(self.parent_states, dtype=bool)
        for g in grids:
            fault &= g == F
        return self._binary_table(fault)

    def sample(self, parent_cols, u, n):
        out = parent_cols[0]
        for col in parent_cols[1:]:
            out = np.maximum(out, col)
        return out.astype(np.uint8)


@dataclass
class OrGate(Cpd):
    """Fires (F) when at least one parent is faulty."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("or gate needs at least one input")
        self.parent_states = (2,) * self.n

    def table(self) -> np.ndarray:
        grids = self._grids()
        fault = np.zeros(self.parent_states, dtype=bool)
        for g in grids:
            fault |= g == F
        return self._binary_table(fault)

    def sample(self, parent_cols, u, n):
        out = parent_cols[0]
        for col in parent_cols[1:]:
            out = np.minimum(out, col)
        return out.astype(np.uint8)


@dataclass
class VoteGate(Cpd):
    """Fires (F) when at least k of the n parents are faulty."""

    k: int
    n: int

    def __post_init__(self):
        if self.n < 1 or not (1 <= self.k <= self.n):
            raise ValueError(f"vote threshold {self.k} outside 1..{self.n}")
        self.parent_states = (2,) * self.n

    def table(self) -> np.ndarray:
        grids = self._grids()
        faults = sum((g == F).astype(np.int64) for g in grids)
        return self._binary_table(faults >= self.k)

    def sample(self, parent_cols, u, n):
        faults = sum((col == F).astype(np.int64) for col in parent_cols)
        return np.where(faults >= self.k, F, T).astype(np.uint8)


@dataclass
class WeightedVote(Cpd):
    """Works (T) when the votes of the working parents reach the residual threshold.

    ``own_votes`` are counted as already contributed; the parents' votes
    must cover ``threshold - own_votes``.
    """

    votes: tuple[int, ...]
    own_votes: int
    threshold: int

    def __post_init__(self):
        if not self.votes:
            raise ValueError("weighted vote gate needs at least one input")
        if any(v <= 0 for v in self.votes):
            raise ValueError("votes must be positive")
        self.parent_states = (2,) * len(self.votes)

    @property
    def residual(self) -> int:
        return self.threshold - self.own_votes

    def table(self) -> np.ndarray:
        grids = self._grids()
        got = sum(v * (g == T).astype(np.int64) for v, g in zip(self.votes, grids))
        return self._binary_table(~(got >= self.residual))

    def sample(self, parent_cols, u, n):
        got = sum(v * (col == T).astype(np.int64) for v, col in zip(self.votes, parent_cols))
        return np.where(got >= self.residual, T, F).astype(np.uint8)


@dataclass
class TableCpd(Cpd):
    """Generic dense table over binary parents, built row by row."""

    array: np.ndarray
    _parent_states: tuple[int, ...]

    def __post_init__(self):
        self.parent_states = tuple(self._parent_states)
        self.array = np.asarray(self.array, dtype=float).reshape(self.parent_states + (-1,))
        self.child_states = self.array.shape[-1]
        sums = self.array.sum(axis=-1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError("table columns must sum to 1")
        self.stochastic = bool(np.any((self.array > 0) & (self.array < 1)))

    def table(self) -> np.ndarray:
        return self.array

    def sample(self, parent_cols, u, n):
        flat = self.array.reshape(-1, self.child_states)
        idx = np.zeros(n, dtype=np.int64)
        for col, s in zip(parent_cols, self.parent_states):
            idx = idx * s + col
        rows = flat[idx]
        if not self.stochastic:
            return np.argmax(rows, axis=-1).astype(np.uint8)
        cdf = np.cumsum(rows, axis=-1)
        return (u[:, None] >= cdf).sum(axis=-1).astype(np.uint8)


@dataclass
class CountStart(Cpd):
    """First counter of a chain: the capped contribution of one binary parent."""

    weight: int
    cap: int
    count_state: int = F

    def __post_init__(self):
        self.parent_states = (2,)
        self.child_states = min(self.weight, self.cap) + 1

    def table(self) -> np.ndarray:
        t = np.zeros((2, self.child_states))
        hit = min(self.weight, self.cap)
        for p in (F, T):
            t[p, hit if p == self.count_state else 0] = 1.0
        return t

    def sample(self, parent_cols, u, n):
        hit = min(self.weight, self.cap)
        return np.where(parent_cols[0] == self.count_state, hit, 0).astype(self.state_dtype())


@dataclass
class CountStep(Cpd):
    """Counter node: previous capped count plus this parent's contribution."""

    prev_states: int
    weight: int
    cap: int
    count_state: int = F

    def __post_init__(self):
        self.parent_states = (self.prev_states, 2)
        self.child_states = min(self.prev_states - 1 + self.weight, self.cap) + 1

    def table(self) -> np.ndarray:
        t = np.zeros((self.prev_states, 2, self.child_states))
        for prev in range(self.prev_states):
            for p in (F, T):
                total = min(prev + (self.weight if p == self.count_state else 0), self.cap)
                t[prev, p, total] = 1.0
        return t

    def sample(self, parent_cols, u, n):
        prev, p = parent_cols
        add = np.where(p == self.count_state, self.weight, 0)
        return np.minimum(prev.astype(np.int64) + add, self.cap).astype(self.state_dtype())


@dataclass
class CountThreshold(Cpd):
    """Binary verdict on a counter: did the capped count reach the cap?"""

    chain_states: int
    reach_means_fault: bool

    def __post_init__(self):
        self.parent_states = (self.chain_states,)

    def table(self) -> np.ndarray:
        t = np.zeros((self.chain_states, 2))
        for v in range(self.chain_states):
            reached = v == self.chain_states - 1
            fault = reached if self.reach_means_fault else not reached
            t[v, F if fault else T] = 1.0
        return t

    def sample(self, parent_cols, u, n):
        reached = parent_cols[0] == self.chain_states - 1
        if self.reach_means_fault:
            return np.where(reached, F, T).astype(np.uint8)
        return np.where(reached, T, F).astype(np.uint8)


# ---------------------------------------------------------------------------
# factories

def and_cpd(n: int) -> AndGate:
    return AndGate(n)


def or_cpd(n: int) -> OrGate:
    return OrGate(n)


def kofn_cpd(k: int, n: int) -> VoteGate:
    return VoteGate(k, n)


def noisy_and_cpd(q: float) -> NoisyAnd:
    return NoisyAnd(q)


def weighted_vote_cpd(votes, own_votes: int, threshold: int) -> WeightedVote:
    if threshold < 1:
        raise ValueError("threshold must be at least 1")
    return WeightedVote(tuple(votes), own_votes, threshold)


@dataclass
class GateSpec:
    """What a gate computes, independent of how it is laid out in the net."""

    kind: str                            # and | or | kofn | noisy_and | weighted
    n: int
    k: int | None = None                 # kofn fault threshold
    q: float | None = None               # noisy_and intrinsic probability
    votes: tuple[int, ...] = ()
    own_votes: int = 0
    threshold: int | None = None

    def __post_init__(self):
        if self.kind not in ("and", "or", "kofn", "noisy_and", "weighted"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "kofn" and not (1 <= (self.k or 0) <= self.n):
            raise ValueError(f"kofn threshold {self.k} outside 1..{self.n}")
        if self.kind == "noisy_and" and not (0.0 <= (self.q or 0.0) <= 1.0):
            raise ValueError("noisy_and needs q in [0,1]")
        if self.kind == "weighted" and (len(self.votes) != self.n or any(v <= 0 for v in self.votes)):
            raise ValueError("weighted gate needs one positive vote per input")

    def dense(self) -> Cpd:
        if self.kind == "and":
            return and_cpd(self.n)
        if self.kind == "or":
            return or_cpd(self.n)
        if self.kind == "kofn":
            return kofn_cpd(self.k, self.n)
        if self.kind == "noisy_and":
            return noisy_and_cpd(self.q)
        return weighted_vote_cpd(self.votes, self.own_votes, self.threshold)


@dataclass
class SubNode:
    """One node of an expanded gate: id, parent ids, rule."""

    id: str
    parents: list[str]
    cpd: Cpd


def expand_scalable(spec: GateSpec, node_id: str, parents: list[str]) -> list[SubNode]:
    """Chain decomposition of a gate, linear in the number of inputs.

    Returns the auxiliary nodes plus the terminal node (always named
    ``node_id``), whose marginal matches the dense gate's child marginal
    under every evidence assignment on the parents.  AND/OR become a
    binary accumulator chain; counting gates accumulate a capped count
    (cap = threshold), so no counter needs more than cap+1 states.
    """
    if spec.kind == "noisy_and":
        raise ValueError("noisy_and is a single-parent model; nothing to expand")
    if len(parents) != spec.n:
        raise ValueError(f"gate arity {spec.n} but {len(parents)} parents supplied")

    if spec.n == 1:
        # passthrough: a 1-input and/or gate mirrors its parent; a 1-input
        # counting gate is its own dense form (already tiny)
        return [SubNode(node_id, list(parents), spec.dense())]

    if spec.kind in ("and", "or"):
        step = AndGate(2) if spec.kind == "and" else OrGate(2)
        nodes = []
        prev = parents[0]
        for j, p in enumerate(parents[1:], start=1):
            nid = node_id if j == spec.n - 1 else f"{node_id}#c{j}"
            nodes.append(SubNode(nid, [prev, p], step))
            prev = nid
        return nodes

    if spec.kind == "kofn":
        weights = [1] * spec.n
        cap = spec.k
        count_state, reach_means_fault = F, True
    else:
        weights = list(spec.votes)
        cap = spec.threshold - spec.own_votes
        count_state, reach_means_fault = T, False
        if cap <= 0:
            # the node's own votes already satisfy the threshold: always working
            return [SubNode(node_id, [], Prior(0.0))]

    nodes = []
    start = CountStart(weights[0], cap, count_state)
    nodes.append(SubNode(f"{node_id}#c1", [parents[0]], start))
    prev_id, prev_states = nodes[0].id, start.child_states
    for j in range(1, spec.n):
        step = CountStep(prev_states, weights[j], cap, count_state)
        nid = f"{node_id}#c{j + 1}"
        nodes.append(SubNode(nid, [prev_id, parents[j]], step))
        prev_id, prev_states = nid, step.child_states
    nodes.append(SubNode(node_id, [prev_id], CountThreshold(prev_states, reach_means_fault)))
    return nodes
