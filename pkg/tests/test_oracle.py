import dataclasses
import random

import pytest

from availnet import (Component, EnumerationLimit, enumerate_availability,
                      evaluate_world, mc_availability, service_up)
from availnet.oracle import OracleError
from conftest import chain_model, random_model, triple_replica_model


def all_up(model):
    return {c.id: False for c in model.components}


class TestServiceUp:
    def test_everything_working(self, small_model):
        assert service_up(small_model, all_up(small_model))

    def test_gateway_down_kills_singleton_entry(self, small_model):
        world = all_up(small_model)
        world["FW"] = True
        assert not service_up(small_model, world)

    def test_rack_failure_cascades_to_replicas_and_firewall(self, small_model):
        world = all_up(small_model)
        world["Ra1"] = True
        w = evaluate_world(small_model, world)
        for victim in ("FW", "N1", "N2", "H1", "H2", "H3", "I1", "I2", "I3"):
            assert w.effective[victim], victim
        assert not w.effective["H4"]
        assert not service_up(small_model, world)

    def test_majority_survives_minority_host_loss(self, small_model):
        world = all_up(small_model)
        world["H1"] = True  # replica I1 lost; six replicas remain
        assert service_up(small_model, world)

    def test_quorum_loss_brings_service_down(self, small_model):
        world = all_up(small_model)
        for h in ("H1", "H2", "H3", "H4"):
            world[h] = True
        assert not service_up(small_model, world)

    def test_monotone_in_single_flips(self):
        rng = random.Random(41)
        for _ in range(20):
            m = random_model(rng, max_uncertain=6)
            world = {c.id: rng.random() < 0.35 for c in m.components}
            if not service_up(m, world):
                continue
            for cid, faulty in world.items():
                if faulty:
                    repaired = dict(world)
                    repaired[cid] = False
                    assert service_up(m, repaired), f"repairing {cid} downed the service"


class TestEnumerate:
    def test_series_chain_closed_form(self):
        assert enumerate_availability(chain_model()) == pytest.approx(0.99 * 0.9, abs=1e-12)

    def test_all_perfect_components(self):
        m = chain_model(gateway_q=0.0, host_q=0.0)
        assert enumerate_availability(m) == 1.0

    def test_three_replica_majority_closed_form(self):
        p = 0.9
        want = p ** 3 + 3 * p ** 2 * (1 - p)
        assert enumerate_availability(triple_replica_model()) == pytest.approx(want, abs=1e-12)

    def test_limit_enforced(self, small_model):
        comps = [dataclasses.replace(c, q=0.01 if c.kind != "instance" else 0.3)
                 for c in small_model.components]
        m = dataclasses.replace(small_model, components=comps)
        with pytest.raises(EnumerationLimit):
            enumerate_availability(m)  # 26 uncertain components

    def test_invalid_model_rejected(self, small_model):
        bad = dataclasses.replace(small_model, gateways=[])
        with pytest.raises(OracleError):
            enumerate_availability(bad)

    def test_scalar_and_vector_paths_agree(self):
        rng = random.Random(4242)
        for _ in range(10):
            m = random_model(rng, max_uncertain=5)
            total_up = 0.0
            import itertools
            uncertain = [c.id for c in m.components if 0 < c.q < 1]
            probs = {c.id: c.q for c in m.components}
            value = 0.0
            for combo in itertools.product((False, True), repeat=len(uncertain)):
                world = {c.id: c.q == 1.0 for c in m.components}
                w = 1.0
                for cid, fired in zip(uncertain, combo):
                    world[cid] = fired
                    w *= probs[cid] if fired else 1 - probs[cid]
                if service_up(m, world):
                    value += w
            assert enumerate_availability(m) == pytest.approx(value, abs=1e-12)


class TestMonteCarlo:
    def test_matches_enumeration_within_interval(self):
        for model in (chain_model(), triple_replica_model()):
            want = enumerate_availability(model)
            est = mc_availability(model, samples=40_000, seed=1)
            lo, hi = est.ci95
            assert lo - 1e-3 <= want <= hi + 1e-3

    def test_small_model_estimate(self, small_model):
        want = enumerate_availability(small_model)
        est = mc_availability(small_model, samples=40_000, seed=2)
        assert abs(est.value - want) <= 4 * est.std_error + 1e-4

    def test_reproducible(self, small_model):
        a = mc_availability(small_model, samples=10_000, seed=3)
        b = mc_availability(small_model, samples=10_000, seed=3)
        assert a.value == b.value

    def test_sample_count_validated(self, small_model):
        with pytest.raises(ValueError):
            mc_availability(small_model, samples=0)
