import pytest

from availnet.bn import BayesNet
from availnet.cpds import AndGate, NoisyAnd, Prior


def small_chain():
    net = BayesNet()
    net.attach("a", [], Prior(0.2))
    net.attach("b", ["a"], NoisyAnd(0.0))
    net.attach("c", ["b"], NoisyAnd(0.1))
    return net


def test_empty_net_is_acyclic():
    assert BayesNet().check_acyclic()


def test_chain_is_acyclic():
    assert small_chain().check_acyclic()


def test_back_edge_makes_cycle():
    net = small_chain()
    net.add_edge("c", "a")
    assert not net.check_acyclic()


def test_duplicate_node_rejected():
    net = small_chain()
    with pytest.raises(ValueError, match="duplicate"):
        net.add_node("a")


def test_edge_endpoints_must_exist():
    net = small_chain()
    with pytest.raises(ValueError):
        net.add_edge("a", "ghost")
    with pytest.raises(ValueError):
        net.add_edge("ghost", "a")


def test_parent_order_is_insertion_order():
    net = BayesNet()
    net.attach("x", [], Prior(0.5))
    net.attach("y", [], Prior(0.5))
    net.attach("g", ["y", "x"], AndGate(2))
    assert net.nodes["g"].parents == ["y", "x"]


def test_consistency_check_flags_arity_mismatch():
    net = BayesNet()
    net.attach("x", [], Prior(0.5))
    net.add_node("g", AndGate(2))
    net.add_edge("x", "g")
    with pytest.raises(ValueError, match="arity"):
        net.check_consistent()


def test_topological_order_is_stable():
    net = small_chain()
    assert net.topological_order() == ["a", "b", "c"]


def test_dump_round_stability():
    d1 = small_chain().dump()
    d2 = small_chain().dump()
    assert d1 == d2
    assert d1.splitlines()[0].startswith("a | parents= | states=2 | table=")


def test_dump_lists_rows_for_small_tables():
    dump = small_chain().dump()
    line_b = [l for l in dump.splitlines() if l.startswith("b ")][0]
    assert "parents=a" in line_b
    # noisy-and with q=0: certain failure under cause, certain health without
    assert "1.0,0.0;0.0,1.0" in line_b
