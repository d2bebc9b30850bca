"""JSON persistence for fitted models.

Every artifact is a single JSON object tagged with ``model_kind`` so a
process run can reload whatever a train step produced.  Serialization is
deterministic: keys are sorted and floats round-trip via repr.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import NotFound
from .apriori import AprioriModel, ItemSet, Rule
from .cluster import ClusterModel
from .features import Attribute, BinningSpec, FeatureSpace
from .regression import RegressionModel
from .tree import Split, TreeModel, TreeNode, TreeParams


def _binning_out(b: BinningSpec | None):
    if b is None:
        return None
    return {"n_bins": b.n_bins, "edges": list(b.edges)}


def _binning_in(d) -> BinningSpec | None:
    if d is None:
        return None
    return BinningSpec(d["n_bins"], tuple(d["edges"]))


def _space_out(space: FeatureSpace | None):
    if space is None:
        return None
    return [{"name": a.name, "kind": a.kind, "weight": a.weight,
             "bounds": list(a.bounds) if a.bounds else None,
             "binning": _binning_out(a.binning)} for a in space.attributes]


def _space_in(items) -> FeatureSpace | None:
    if items is None:
        return None
    return FeatureSpace(tuple(
        Attribute(a["name"], a["kind"], a["weight"],
                  tuple(a["bounds"]) if a["bounds"] else None,
                  _binning_in(a["binning"]))
        for a in items))


def _cluster_out(m: ClusterModel) -> dict:
    return {
        "model_kind": "cluster",
        "method": m.method,
        "k": m.k,
        "space": _space_out(m.space),
        "centroids": m.centroids,
        "sizes": m.sizes,
        "labels": m.labels,
        "sse": m.sse,
        "sse_history": m.sse_history,
        "noise": m.noise,
    }


def _cluster_in(d) -> ClusterModel:
    return ClusterModel(d["method"], d["k"], _space_in(d["space"]),
                        d["centroids"], d["sizes"], d["labels"],
                        d["sse"], d["sse_history"], d["noise"])


def _tree_out(m: TreeModel) -> dict:
    nodes = []
    for node in sorted(m.nodes.values(), key=lambda n: n.node_id):
        out = {"node_id": node.node_id, "counts": node.counts}
        if node.split is not None:
            s = node.split
            out["split"] = {"attribute": s.attribute, "kind": s.kind,
                            "threshold": s.threshold, "branches": s.branches,
                            "left": s.left, "right": s.right,
                            "majority_child": s.majority_child}
        nodes.append(out)
    return {
        "model_kind": "tree",
        "target": m.target,
        "features": [list(f) for f in m.features],
        "params": {"max_leaves": m.params.max_leaves,
                   "min_leaf_size": m.params.min_leaf_size,
                   "min_gain": m.params.min_gain},
        "nodes": nodes,
        "binnings": {name: _binning_out(b) for name, b in sorted(m.binnings.items())},
    }


def _tree_in(d) -> TreeModel:
    nodes: dict[int, TreeNode] = {}
    for nd in d["nodes"]:
        split = None
        if "split" in nd:
            s = nd["split"]
            split = Split(s["attribute"], s["kind"], s["threshold"],
                          dict(s["branches"]), s["left"], s["right"],
                          s["majority_child"])
        nodes[nd["node_id"]] = TreeNode(nd["node_id"], dict(nd["counts"]), split)
    p = d["params"]
    params = TreeParams(p["max_leaves"], p["min_leaf_size"], p["min_gain"])
    features = [(f[0], f[1]) for f in d["features"]]
    binnings = {name: _binning_in(b) for name, b in d["binnings"].items()}
    return TreeModel(d["target"], features, nodes, params, binnings)


def _regression_out(m: RegressionModel) -> dict:
    return {"model_kind": "regression", "x_name": m.x_name, "y_name": m.y_name,
            "weight": m.weight, "n": m.n}


def _apriori_out(m: AprioriModel) -> dict:
    return {
        "model_kind": "apriori",
        "min_support": m.min_support,
        "min_confidence": m.min_confidence,
        "n_rows": m.n_rows,
        "itemsets": [{"items": list(s.items), "support": s.support,
                      "count": s.count} for s in m.itemsets],
        "rules": [{"antecedent": list(r.antecedent),
                   "consequent": list(r.consequent),
                   "support": r.support, "confidence": r.confidence}
                  for r in m.rules],
    }


def _apriori_in(d) -> AprioriModel:
    itemsets = tuple(ItemSet(tuple(s["items"]), s["support"], s["count"])
                     for s in d["itemsets"])
    rules = tuple(Rule(tuple(r["antecedent"]), tuple(r["consequent"]),
                       r["support"], r["confidence"]) for r in d["rules"])
    return AprioriModel(itemsets, rules, d["min_support"],
                        d["min_confidence"], d["n_rows"])


_WRITERS = {
    ClusterModel: _cluster_out,
    TreeModel: _tree_out,
    RegressionModel: _regression_out,
    AprioriModel: _apriori_out,
}

_READERS = {
    "cluster": _cluster_in,
    "tree": _tree_in,
    "regression": lambda d: RegressionModel(d["x_name"], d["y_name"],
                                            d["weight"], d["n"]),
    "apriori": _apriori_in,
}


def save_model(model, path: str | Path) -> None:
    writer = _WRITERS.get(type(model))
    if writer is None:
        raise TypeError(f"not a serializable model: {type(model).__name__}")
    payload = json.dumps(writer(model), sort_keys=True, indent=1)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def load_model(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise NotFound(f"no model artifact at {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    reader = _READERS.get(data.get("model_kind"))
    if reader is None:
        raise NotFound(f"unknown model kind in {path}")
    return reader(data)
