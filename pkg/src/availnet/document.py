"""JSON document form of a SystemModel.

The document is a single self-describing object; the field names below
are normative for the file format:

components[] (id, kind, q), fault_edges[], fault_trees{} (nested gate
expressions with operators "and"/"or"/"vote:k"), network_nodes[],
network_edges[], deployment{}, gateways[], quorum (sets:[[...]] or
votes:[...] plus threshold), replicated.

Vote lists align with the instances in components[] order.  Models
round-trip losslessly through parse/serialize.
"""

from __future__ import annotations

import json

from .model import (Component, FaultDependencyGraph, Gate, NetworkGraph,
                    QuorumSpec, SystemModel)


class DocumentError(ValueError):
    pass


def _tree_to_doc(tree: Gate):
    return {"op": tree.op,
            "args": [_tree_to_doc(a) if isinstance(a, Gate) else a for a in tree.args]}


def _tree_from_doc(doc, where: str) -> Gate:
    if not isinstance(doc, dict) or "op" not in doc or "args" not in doc:
        raise DocumentError(f"fault tree {where}: gate must be an object with op and args")
    op = doc["op"]
    if not (op in ("and", "or") or (isinstance(op, str) and op.startswith("vote:"))):
        raise DocumentError(f"fault tree {where}: unknown operator {op!r}")
    if op.startswith("vote:"):
        try:
            int(op.split(":", 1)[1])
        except ValueError:
            raise DocumentError(f"fault tree {where}: bad vote threshold in {op!r}") from None
    args = []
    for a in doc["args"]:
        if isinstance(a, str):
            args.append(a)
        else:
            args.append(_tree_from_doc(a, where))
    return Gate(op, tuple(args))


def to_document(model: SystemModel) -> dict:
    q = model.quorum
    if q.is_voting:
        inst_order = model.instance_ids()
        quorum = {"votes": [q.votes[i] for i in inst_order], "threshold": q.threshold}
    else:
        quorum = {"sets": sorted(sorted(s) for s in q.explicit_sets)}
    return {
        "components": [{"id": c.id, "kind": c.kind, "q": c.q} for c in model.components],
        "fault_edges": [[p, c] for p, c in model.fault_graph.edges],
        "fault_trees": {cid: _tree_to_doc(t) for cid, t in model.fault_graph.trees.items()},
        "network_nodes": list(model.network.nodes),
        "network_edges": [[a, b] for a, b in model.network.edges],
        "deployment": dict(model.deployment),
        "gateways": list(model.gateways),
        "quorum": quorum,
        "replicated": bool(model.replicated),
    }


def from_document(doc: dict) -> SystemModel:
    if not isinstance(doc, dict):
        raise DocumentError("model document must be a JSON object")
    for key in ("components", "network_nodes", "network_edges", "deployment",
                "gateways", "quorum", "replicated"):
        if key not in doc:
            raise DocumentError(f"model document is missing the {key!r} field")

    comps = []
    for i, c in enumerate(doc["components"]):
        if not isinstance(c, dict) or "id" not in c or "kind" not in c:
            raise DocumentError(f"components[{i}] needs id and kind")
        comps.append(Component(str(c["id"]), str(c["kind"]), float(c.get("q", 0.0))))

    edges = []
    for e in doc.get("fault_edges", []):
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise DocumentError(f"fault edge {e!r} must be a [parent, child] pair")
        edges.append((str(e[0]), str(e[1])))

    trees = {str(cid): _tree_from_doc(t, where=str(cid))
             for cid, t in doc.get("fault_trees", {}).items()}

    net_edges = []
    for e in doc["network_edges"]:
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise DocumentError(f"network edge {e!r} must be a pair")
        net_edges.append((str(e[0]), str(e[1])))
    network = NetworkGraph(nodes=[str(n) for n in doc["network_nodes"]], edges=net_edges)

    qdoc = doc["quorum"]
    if not isinstance(qdoc, dict):
        raise DocumentError("quorum must be an object")
    inst_ids = [c.id for c in comps if c.kind == "instance"]
    if "votes" in qdoc:
        votes = list(qdoc["votes"])
        if len(votes) != len(inst_ids):
            raise DocumentError(
                f"quorum lists {len(votes)} votes but the document declares {len(inst_ids)} instances")
        quorum = QuorumSpec.voting({i: int(v) for i, v in zip(inst_ids, votes)},
                                   int(qdoc.get("threshold", 0)))
    elif "sets" in qdoc:
        quorum = QuorumSpec.explicit([[str(m) for m in s] for s in qdoc["sets"]])
    else:
        raise DocumentError("quorum needs either votes+threshold or sets")

    return SystemModel(
        components=comps,
        quorum=quorum,
        fault_graph=FaultDependencyGraph(edges=edges, trees=trees),
        network=network,
        deployment={str(k): str(v) for k, v in doc["deployment"].items()},
        gateways=[str(g) for g in doc["gateways"]],
        replicated=bool(doc["replicated"]))


def dumps(model: SystemModel) -> str:
    return json.dumps(to_document(model), indent=2) + "\n"


def loads(text: str) -> SystemModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from None
    return from_document(doc)
