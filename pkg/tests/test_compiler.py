import dataclasses

import numpy as np
import pytest

from availnet import (Component, CompileOptions, FaultDependencyGraph, Gate,
                      InvalidModelError, NetworkGraph, QuorumSpec, SystemModel,
                      create_fault_graph, create_service_model, enumerate_routes,
                      exact_marginal, with_instances)
from availnet.compiler import channel_count, k_count, route_count
from conftest import chain_model


class TestRouteEnumeration:
    def test_small_topology_grouped_routes(self, small_model):
        # the seven gateway channels collapse onto three distinct interiors
        interiors = set()
        for inst, host in small_model.deployment.items():
            for r in enumerate_routes(small_model.network, "FW", host):
                interiors.add(frozenset(r.components))
        assert interiors == {frozenset({"N2", "N1"}), frozenset({"N2", "N3"}),
                             frozenset({"N2", "N3", "N4"})}

    def test_adjacent_endpoints_have_one_empty_route(self, small_model):
        routes = enumerate_routes(small_model.network, "FW", "N2")
        assert [r.components for r in routes] == [()]

    def test_same_endpoint_is_empty_route(self, small_model):
        assert [r.components for r in enumerate_routes(small_model.network, "H7", "H7")] == [()]

    def test_disconnected_pair_has_no_routes(self):
        net = NetworkGraph(nodes=["a", "b", "c", "d"], edges=[("a", "b"), ("c", "d")])
        assert enumerate_routes(net, "a", "c") == []

    def test_multi_route_ordering_shortest_then_lexicographic(self):
        # diamond: s - (x|y) - t plus a longer detour s-x-y-t
        net = NetworkGraph(nodes=["s", "x", "y", "t"],
                           edges=[("s", "x"), ("s", "y"), ("x", "t"), ("y", "t"),
                                  ("x", "y")])
        routes = [r.components for r in enumerate_routes(net, "s", "t")]
        assert routes == [("x",), ("y",), ("x", "y"), ("y", "x")]

    def test_limit_truncates_after_ordering(self):
        net = NetworkGraph(nodes=["s", "x", "y", "t"],
                           edges=[("s", "x"), ("s", "y"), ("x", "t"), ("y", "t"),
                                  ("x", "y")])
        routes = [r.components for r in enumerate_routes(net, "s", "t", limit=2)]
        assert routes == [("x",), ("y",)]

    def test_unknown_endpoint_rejected(self, small_model):
        with pytest.raises(ValueError, match="ghost"):
            enumerate_routes(small_model.network, "FW", "ghost")

    def test_pendant_pair_pocket(self):
        net = NetworkGraph(nodes=["a", "b", "s", "t"],
                           edges=[("a", "b"), ("s", "t")])
        assert enumerate_routes(net, "a", "t") == []

    def test_contraction_matches_direct_search(self):
        # host hanging off a switch ring; contracted search must agree with
        # brute-force enumeration over the same graph
        import itertools
        import networkx as nx
        net = NetworkGraph(
            nodes=["h1", "h2", "s1", "s2", "s3", "s4"],
            edges=[("h1", "s1"), ("h2", "s3"), ("s1", "s2"), ("s2", "s3"),
                   ("s3", "s4"), ("s4", "s1")])
        got = [r.components for r in enumerate_routes(net, "h1", "h2")]
        g = nx.Graph(net.edges)
        want = sorted((tuple(p[1:-1]) for p in nx.all_simple_paths(g, "h1", "h2")),
                      key=lambda r: (len(r), r))
        assert got == want


class TestFaultGraphStage:
    def test_root_component_gets_prior(self, small_model):
        net = create_fault_graph(small_model)
        assert net.nodes["comp:DC1"].parents == []
        assert net.nodes["comp:DC1"].cpd.table()[0] == pytest.approx(0.0092)

    def test_nested_tree_shapes_gate_subgraph(self):
        comps = [Component("PSU1", "infrastructure", 0.1),
                 Component("PSU2", "infrastructure", 0.1),
                 Component("Rack", "infrastructure", 0.05),
                 Component("Host", "host", 0.02)]
        tree = Gate("or", ("Rack", Gate("and", ("PSU1", "PSU2"))))
        model = SystemModel(
            components=comps + [Component("I1", "instance", 0.0)],
            quorum=QuorumSpec.voting({"I1": 1}, 1),
            fault_graph=FaultDependencyGraph(
                edges=[("PSU1", "Host"), ("PSU2", "Host"), ("Rack", "Host")],
                trees={"Host": tree}),
            network=NetworkGraph(nodes=["Host"], edges=[]),
            deployment={"I1": "Host"},
            gateways=["Host"],
            replicated=False)
        net = create_fault_graph(model)
        assert net.nodes["comp:Host"].parents == ["gate:Host"]
        assert net.nodes["gate:Host"].parents == ["comp:Rack", "gate:Host.1"]
        assert net.nodes["gate:Host.1"].parents == ["comp:PSU1", "comp:PSU2"]

    def test_perfect_instance_inherits_host_marginal(self, small_model):
        net = create_service_model(small_model)
        host = exact_marginal(net, "comp:H1")
        inst = exact_marginal(net, "comp:I1")
        assert inst.p_fault == pytest.approx(host.p_fault, abs=1e-12)

    def test_unknown_tree_leaf_rejected_at_compile(self, small_model):
        bad = dataclasses.replace(
            small_model,
            fault_graph=FaultDependencyGraph(
                edges=small_model.fault_graph.edges,
                trees={"FW": Gate("and", ("ghost",))}))
        with pytest.raises(InvalidModelError):
            create_service_model(bad)


class TestServiceStructure:
    def test_replicated_channel_and_route_counts(self, small_model):
        net = create_service_model(small_model)
        # 21 inter-replica channels plus 7 gateway channels
        assert channel_count(net) == 28
        assert k_count(net) == 7
        assert "S" in net
        # distinct interiors: 6 inner host-pair groups (incl. the empty
        # same-host route) plus 3 gateway groups
        assert route_count(net) == 9

    def test_redundant_channel_and_route_counts(self, small_redundant):
        net = create_service_model(small_redundant)
        assert channel_count(net) == 7
        assert route_count(net) == 3
        assert k_count(net) == 1

    def test_compiled_network_is_acyclic(self, small_model):
        assert create_service_model(small_model).check_acyclic()

    @pytest.mark.parametrize("n", [3, 10, 50])
    def test_channel_count_formulas(self, small_model, n):
        gw = len(small_model.gateways)
        red = create_service_model(with_instances(small_model, n, replicated=False))
        assert channel_count(red) == gw * n
        rep = create_service_model(with_instances(small_model, n, replicated=True))
        assert channel_count(rep) == n * (n - 1) // 2 + gw * n

    def test_route_nodes_shared_across_channels(self, small_redundant):
        net = create_service_model(small_redundant)
        # channels to H1..H3 instances share one route node
        r1 = net.nodes["and:FW-I1"].parents
        r2 = net.nodes["and:FW-I2"].parents
        assert r1 == r2 and len(r1) == 1

    def test_channel_parent_order(self, small_model):
        net = create_service_model(small_model)
        assert net.nodes["chan:I1-I2"].parents == ["and:I1-I2", "comp:I1", "comp:I2"]
        assert net.nodes["chan:FW-I1"].parents == ["and:FW-I1", "comp:FW", "K:1"]

    def test_service_node_aggregation_per_kind(self, small_model, small_redundant):
        rep = create_service_model(small_model)
        red = create_service_model(small_redundant)
        # replicated wires every gateway channel into the service node;
        # redundant goes through one K per gateway
        assert all(p.startswith("chan:") for p in _terminal_parents(rep))
        assert _terminal_parents(red) == ["K:1"]

    def test_same_host_channel_never_fails_on_routes(self, small_model):
        net = create_service_model(small_model)
        chan = net.nodes["chan:I6-I7"]
        and_node = net.nodes[chan.parents[0]]
        route = net.nodes[and_node.parents[0]]
        assert route.parents == []
        assert route.cpd.table()[1] == 1.0  # the empty route never fails

    def test_majority_k_nodes_use_residual_fault_threshold(self, small_model):
        net = create_service_model(small_model, CompileOptions(gate_mode="dense"))
        cpd = net.nodes["K:1"].cpd
        # majority of 7 needs 3 working peers of 6: fails at 4 channel faults
        assert type(cpd).__name__ == "VoteGate"
        assert (cpd.k, cpd.n) == (4, 6)

    def test_redundant_majority_uses_four_of_seven(self, small_redundant):
        net = create_service_model(small_redundant, CompileOptions(gate_mode="dense"))
        cpd = net.nodes["K:1"].cpd
        assert (cpd.k, cpd.n) == (4, 7)

    def test_invalid_model_rejected(self, small_model):
        bad = dataclasses.replace(small_model, gateways=[])
        with pytest.raises(InvalidModelError, match="gateway"):
            create_service_model(bad)

    def test_compile_twice_same_dump(self, small_model):
        d1 = create_service_model(small_model).dump()
        d2 = create_service_model(small_model).dump()
        assert d1 == d2

    def test_explicit_quorum_builds_table_rows(self, small_model):
        explicit = QuorumSpec.explicit(
            [{"I1", "I2"}, {"I3", "I4", "I5"}, {"I6", "I7"}])
        m = dataclasses.replace(small_model, quorum=explicit)
        net = create_service_model(m)
        assert type(net.nodes["K:1"].cpd).__name__ == "TableCpd"

    def test_gate_mode_none_of_modes_changes_structure_counts(self, small_model):
        counts = set()
        for mode in ("auto", "dense", "scalable"):
            net = create_service_model(small_model, CompileOptions(gate_mode=mode))
            counts.add(channel_count(net))
        assert counts == {28}


def _terminal_parents(net):
    # the service verdict may sit behind an accumulator chain; walk the
    # first-parent spine until the original inputs appear
    parents = net.nodes["S"].parents
    while parents and parents[0].startswith("S#"):
        spine = net.nodes[parents[0]].parents
        parents = spine + parents[1:]
    return [p for p in parents if not p.startswith("S#")]


class TestDegenerateChannels:
    def test_unreachable_host_yields_certain_channel_failure(self):
        m = chain_model()
        # detach the host from the network: no route between gateway and host
        m = dataclasses.replace(
            m, network=NetworkGraph(nodes=["G", "H"], edges=[]))
        net = create_service_model(m)
        res = exact_marginal(net, "S")
        assert res.p_working == 0.0

    def test_single_chain_availability_is_product(self):
        net = create_service_model(chain_model())
        assert exact_marginal(net, "S").p_working == pytest.approx(0.99 * 0.9, abs=1e-15)
