import itertools

import numpy as np
import pytest

from availnet.cpds import (F, T, GateSpec, and_cpd, expand_scalable, kofn_cpd,
                           noisy_and_cpd, or_cpd, weighted_vote_cpd)


def rows(cpd):
    return cpd.table().reshape(-1, cpd.child_states)


def row_for(cpd, combo):
    """P(child = ·) for one parent state combination."""
    return cpd.table()[combo]


class TestAndGate:
    def test_all_faulty_fires(self):
        assert row_for(and_cpd(2), (F, F))[F] == 1.0

    def test_any_working_blocks(self):
        assert row_for(and_cpd(2), (T, F))[T] == 1.0

    def test_single_input_mirrors_parent(self):
        c = and_cpd(1)
        assert row_for(c, (F,))[F] == 1.0
        assert row_for(c, (T,))[T] == 1.0

    def test_zero_arity_rejected(self):
        with pytest.raises(ValueError):
            and_cpd(0)


class TestOrGate:
    def test_one_fault_fires(self):
        assert row_for(or_cpd(3), (T, T, F))[F] == 1.0

    def test_all_working_stays_up(self):
        assert row_for(or_cpd(3), (T, T, T))[T] == 1.0

    def test_single_input_mirrors_parent(self):
        c = or_cpd(1)
        assert row_for(c, (F,))[F] == 1.0
        assert row_for(c, (T,))[T] == 1.0

    def test_zero_arity_rejected(self):
        with pytest.raises(ValueError):
            or_cpd(0)


class TestVoteGate:
    def test_two_of_three_fires_at_two_faults(self):
        assert row_for(kofn_cpd(2, 3), (F, F, T))[F] == 1.0

    def test_two_of_three_survives_one_fault(self):
        assert row_for(kofn_cpd(2, 3), (F, T, T))[T] == 1.0

    def test_k_equals_n_matches_and(self):
        assert np.array_equal(kofn_cpd(4, 4).table(), and_cpd(4).table())

    def test_k_one_matches_or(self):
        assert np.array_equal(kofn_cpd(1, 5).table(), or_cpd(5).table())

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            kofn_cpd(4, 3)
        with pytest.raises(ValueError):
            kofn_cpd(0, 3)


class TestNoisyAnd:
    def test_cause_forces_failure(self):
        assert row_for(noisy_and_cpd(0.3), (F,))[F] == 1.0

    def test_intrinsic_probability_when_cause_absent(self):
        assert row_for(noisy_and_cpd(0.0092), (T,))[F] == pytest.approx(0.0092)

    def test_perfect_component_never_fails_alone(self):
        assert row_for(noisy_and_cpd(0.0), (T,))[T] == 1.0

    def test_bad_probability_rejected(self):
        with pytest.raises(ValueError):
            noisy_and_cpd(1.5)


class TestWeightedVote:
    def test_two_one_one_votes_threshold_three(self):
        # own votes 2, so one working unit channel reaches the threshold
        c = weighted_vote_cpd((1, 1), own_votes=2, threshold=3)
        expect = {(F, F): F, (T, F): T, (F, T): T, (T, T): T}
        for combo, state in expect.items():
            assert row_for(c, combo)[state] == 1.0

    def test_own_votes_cover_threshold(self):
        c = weighted_vote_cpd((1, 1, 1), own_votes=3, threshold=3)
        assert row_for(c, (F, F, F))[T] == 1.0

    def test_unit_votes_reduce_to_fault_counting_gate(self):
        # threshold 2 with own vote 1: one working channel of two needed,
        # identical to the two-fault gate over the same parents
        w = weighted_vote_cpd((1, 1), own_votes=1, threshold=2)
        assert np.array_equal(w.table(), kofn_cpd(2, 2).table())

    @pytest.mark.parametrize("n,k", [(n, k) for n in range(2, 11) for k in range(2, n + 1)])
    def test_unit_votes_match_residual_form(self, n, k):
        # replica view: k-1 working peers of n-1 needed; fault view: fires
        # at n-k+1 channel faults
        w = weighted_vote_cpd((1,) * (n - 1), own_votes=1, threshold=k)
        v = kofn_cpd(n - k + 1, n - 1)
        assert np.array_equal(w.table(), v.table())


class TestTableHygiene:
    @pytest.mark.parametrize("cpd", [
        and_cpd(3), or_cpd(4), kofn_cpd(2, 5), noisy_and_cpd(0.25),
        weighted_vote_cpd((2, 1, 1), 2, 3),
    ])
    def test_columns_sum_to_one(self, cpd):
        sums = cpd.table().sum(axis=-1)
        assert np.all(np.abs(sums - 1.0) <= 1e-12)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_and_equals_kofn_nn_and_or_equals_kofn_1n(self, n):
        assert np.array_equal(and_cpd(n).table(), kofn_cpd(n, n).table())
        assert np.array_equal(or_cpd(n).table(), kofn_cpd(1, n).table())


def chain_eval(nodes, assignment):
    """Evaluate an expanded gate's nodes on one full parent assignment."""
    values = dict(assignment)
    for sub in nodes:
        cols = [np.array([values[p]]) for p in sub.parents]
        values[sub.id] = int(sub.cpd.sample(cols, None, 1)[0])
    return values[nodes[-1].id]


class TestExpandScalable:
    def test_and_three_adds_two_binary_nodes(self):
        nodes = expand_scalable(GateSpec("and", 3), "g", ["a", "b", "c"])
        assert len(nodes) == 2
        assert nodes[-1].id == "g"
        assert all(n.cpd.child_states == 2 for n in nodes)

    def test_single_parent_passthrough(self):
        nodes = expand_scalable(GateSpec("or", 1), "g", ["a"])
        assert len(nodes) == 1
        assert nodes[0].parents == ["a"]

    def test_kofn_chain_states_capped_at_threshold(self):
        nodes = expand_scalable(GateSpec("kofn", 3, k=2), "g", ["a", "b", "c"])
        counters = [n for n in nodes if n.id.startswith("g#")]
        assert max(n.cpd.child_states for n in counters) == 3  # counts 0,1,2

    @pytest.mark.parametrize("kind,param", [("and", None), ("or", None)])
    @pytest.mark.parametrize("n", range(1, 8))
    def test_and_or_chains_match_dense_exhaustively(self, kind, param, n):
        spec = GateSpec(kind, n)
        parents = [f"p{i}" for i in range(n)]
        nodes = expand_scalable(spec, "g", parents)
        dense = spec.dense()
        for combo in itertools.product((F, T), repeat=n):
            got = chain_eval(nodes, dict(zip(parents, combo)))
            assert dense.table()[combo][got] == 1.0

    @pytest.mark.parametrize("n", range(2, 8))
    def test_kofn_chains_match_dense_exhaustively(self, n):
        for k in range(1, n + 1):
            spec = GateSpec("kofn", n, k=k)
            parents = [f"p{i}" for i in range(n)]
            nodes = expand_scalable(spec, "g", parents)
            dense = spec.dense()
            for combo in itertools.product((F, T), repeat=n):
                got = chain_eval(nodes, dict(zip(parents, combo)))
                assert dense.table()[combo][got] == 1.0

    def test_weighted_chain_matches_dense_exhaustively(self):
        spec = GateSpec("weighted", 4, votes=(2, 1, 3, 1), own_votes=1, threshold=4)
        parents = [f"p{i}" for i in range(4)]
        nodes = expand_scalable(spec, "g", parents)
        dense = spec.dense()
        for combo in itertools.product((F, T), repeat=4):
            got = chain_eval(nodes, dict(zip(parents, combo)))
            assert dense.table()[combo][got] == 1.0

    def test_chain_marginals_match_dense_for_random_priors(self):
        # independent parents: chain terminal marginal must equal the
        # dense gate marginal computed by direct enumeration
        rng = np.random.default_rng(5)
        checked = 0
        for n in range(2, 13):
            for k in (1, 2, (n + 1) // 2, n):
                if not 1 <= k <= n:
                    continue
                spec = GateSpec("kofn", n, k=k)
                parents = [f"p{i}" for i in range(n)]
                nodes = expand_scalable(spec, "g", parents)
                for _ in range(5):
                    priors = rng.random(n)  # P(parent working)
                    dense_pf = _dense_fault_marginal(spec, priors)
                    chain_pf = _chain_fault_marginal(nodes, parents, priors)
                    assert abs(dense_pf - chain_pf) <= 1e-12
                    checked += 1
        assert checked >= 200


def _dense_fault_marginal(spec, priors):
    table = spec.dense().table()
    p = 0.0
    for combo in itertools.product((F, T), repeat=spec.n):
        w = 1.0
        for s, pt in zip(combo, priors):
            w *= pt if s == T else 1.0 - pt
        p += w * table[combo][F]
    return p


def _chain_fault_marginal(nodes, parents, priors):
    """Forward belief propagation through the chain (exact, parents independent)."""
    dists = {p: np.array([1.0 - pt, pt]) for p, pt in zip(parents, priors)}
    for sub in nodes:
        table = sub.cpd.table()
        out = np.zeros(sub.cpd.child_states)
        shapes = [dists[p] for p in sub.parents]
        for combo in itertools.product(*[range(len(d)) for d in shapes]):
            w = 1.0
            for idx, d in zip(combo, shapes):
                w *= d[idx]
            out += w * table[combo]
        dists[sub.id] = out
    return dists[nodes[-1].id][F]
