"""Directed acyclic network of discrete nodes with attached CPDs.

The compiler populates this container; inference treats it as read-only.
Parent order is the order edges were added, and all table indexing is
defined relative to that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cpds import Cpd

DUMP_TABLE_CAP = 4096


@dataclass
class Node:
    id: str
    cpd: Cpd | None = None
    parents: list[str] = field(default_factory=list)

    @property
    def states(self) -> int:
        return self.cpd.child_states if self.cpd is not None else 2


class BayesNet:
    """DAG of discrete nodes; node "S" is the designated service node."""

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.children: dict[str, list[str]] = {}

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def add_node(self, node_id: str, cpd: Cpd | None = None) -> Node:
        if node_id in self.nodes:
            raise ValueError(f"duplicate node id {node_id!r}")
        node = Node(node_id, cpd)
        self.nodes[node_id] = node
        self.children[node_id] = []
        return node

    def add_edge(self, parent: str, child: str) -> None:
        if parent not in self.nodes:
            raise ValueError(f"edge parent {parent!r} does not exist")
        if child not in self.nodes:
            raise ValueError(f"edge child {child!r} does not exist")
        self.nodes[child].parents.append(parent)
        self.children[parent].append(child)

    def attach(self, node_id: str, parents: list[str], cpd: Cpd) -> Node:
        """Add a node and its incoming edges in one declared order."""
        node = self.add_node(node_id, cpd)
        for p in parents:
            self.add_edge(p, node_id)
        return node

    def set_cpd(self, node_id: str, cpd: Cpd) -> None:
        self.nodes[node_id].cpd = cpd

    def edge_count(self) -> int:
        return sum(len(n.parents) for n in self.nodes.values())

    def check_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except ValueError:
            return False

    def topological_order(self) -> list[str]:
        """Kahn's algorithm, stable with respect to insertion order."""
        missing = {nid: len(n.parents) for nid, n in self.nodes.items()}
        ready = [nid for nid in self.nodes if missing[nid] == 0]
        order: list[str] = []
        i = 0
        while i < len(ready):
            nid = ready[i]
            i += 1
            order.append(nid)
            for child in self.children[nid]:
                missing[child] -= 1
                if missing[child] == 0:
                    ready.append(child)
        if len(order) != len(self.nodes):
            raise ValueError("network contains a directed cycle")
        return order

    def check_consistent(self) -> None:
        """Verify CPD arities and parent state spaces line up with the graph."""
        for nid, node in self.nodes.items():
            if node.cpd is None:
                raise ValueError(f"node {nid!r} has no CPD")
            if node.cpd.arity != len(node.parents):
                raise ValueError(
                    f"node {nid!r}: CPD arity {node.cpd.arity} != {len(node.parents)} parents")
            for p, s in zip(node.parents, node.cpd.parent_states):
                if self.nodes[p].states != s:
                    raise ValueError(
                        f"node {nid!r}: parent {p!r} has {self.nodes[p].states} states, CPD expects {s}")

    def count_prefix(self, prefix: str) -> int:
        return sum(1 for nid in self.nodes if nid.startswith(prefix))

    def dump(self) -> str:
        """Text export, one node per line: id, parents, states, table rows.

        Tables larger than DUMP_TABLE_CAP entries are summarized by their
        rule instead of expanded.  Lines follow topological order, so two
        compilations of the same model produce identical dumps.
        """
        lines = []
        for nid in self.topological_order():
            node = self.nodes[nid]
            cpd = node.cpd
            if cpd.table_entries <= DUMP_TABLE_CAP:
                flat = cpd.table().reshape(-1, cpd.child_states)
                rows = ";".join(",".join(repr(float(v)) for v in row) for row in flat)
                body = f"table={rows}"
            else:
                body = f"rule={type(cpd).__name__}(arity={cpd.arity})"
            lines.append(f"{nid} | parents={','.join(node.parents)} | states={node.states} | {body}")
        return "\n".join(lines) + "\n"
