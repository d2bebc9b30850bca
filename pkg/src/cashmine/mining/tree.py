"""Decision-tree classification with information-gain splits.

Categorical attributes split multiway over their observed values; numeric
attributes split binary at equal-width bin edges fitted on the training
column.  Growth is best-first (highest gain expands next) so a leaf budget
behaves predictably, and stops at max_leaves, min_leaf_size or min_gain.
Leaves keep the full class-frequency distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import FitError
from ..tables import NUM, Table
from .features import DEFAULT_BINS, BinningSpec, fit_binning

CATEGORICAL_SPLIT = "categorical"
THRESHOLD_SPLIT = "threshold"


@dataclass(frozen=True)
class TreeParams:
    max_leaves: int | None = None   # None = unrestricted
    min_leaf_size: int = 1
    min_gain: float = 0.0           # splits with gain < min_gain are rejected


@dataclass
class Split:
    attribute: str
    kind: str                              # categorical | threshold
    threshold: float | None = None
    branches: dict = field(default_factory=dict)   # value -> child id
    left: int | None = None                # x <= threshold
    right: int | None = None
    majority_child: int = 0                # route for unseen categorical values


@dataclass
class TreeNode:
    node_id: int
    counts: dict[str, int]                 # target class -> training count
    split: Split | None = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def size(self) -> int:
        return sum(self.counts.values())

    def distribution(self) -> dict[str, float]:
        total = self.size
        return {cls: c / total for cls, c in sorted(self.counts.items())}


@dataclass
class TreeModel:
    target: str
    features: list[tuple[str, str]]        # (name, char|num)
    nodes: dict[int, TreeNode]
    params: TreeParams
    binnings: dict[str, BinningSpec] = field(default_factory=dict)

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes.values() if n.is_leaf]


@dataclass(frozen=True)
class TreePrediction:
    node_id: int
    probability: float
    value: str


def _entropy(counts: dict[str, int]) -> float:
    total = sum(counts.values())
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts.values():
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def _class_counts(rows: list[int], targets: list[str]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for i in rows:
        counts[targets[i]] = counts.get(targets[i], 0) + 1
    return counts


def _candidate_splits(rows, targets, feature, values, binning, min_leaf_size):
    """Yield (gain, partition) for every admissible split of one attribute.

    A partition maps branch label -> row-index list; every branch must hold
    at least ``min_leaf_size`` rows and there must be at least two branches.
    """
    name, kind = feature
    parent_counts = _class_counts(rows, targets)
    parent_h = _entropy(parent_counts)
    n = len(rows)

    def gain_of(partition: dict) -> float:
        h = 0.0
        for branch_rows in partition.values():
            h += len(branch_rows) / n * _entropy(_class_counts(branch_rows, targets))
        return parent_h - h

    if kind == "num":
        if binning is None:
            return
        for edge in binning.edges[1:-1]:
            left = [i for i in rows if float(values[i]) <= edge]
            right = [i for i in rows if float(values[i]) > edge]
            if len(left) < min_leaf_size or len(right) < min_leaf_size:
                continue
            partition = {"<=": left, ">": right}
            yield gain_of(partition), (name, THRESHOLD_SPLIT, edge, partition)
    else:
        partition: dict[str, list[int]] = {}
        for i in rows:
            partition.setdefault(values[i], []).append(i)
        if len(partition) < 2:
            return
        if any(len(b) < min_leaf_size for b in partition.values()):
            return
        partition = dict(sorted(partition.items()))
        yield gain_of(partition), (name, CATEGORICAL_SPLIT, None, partition)


def tree_fit(table: Table, target: str, params: TreeParams = TreeParams(),
             features: list[str] | None = None,
             n_bins: int = DEFAULT_BINS) -> TreeModel:
    """Greedy induction maximizing information gain.

    ``features`` defaults to every non-target column.  A constant target
    yields a root-only tree; an empty table is an error.
    """
    if not table.rows:
        raise FitError("cannot fit a tree on an empty table")
    target_col = table.column(target)
    if target_col.kind == NUM:
        raise FitError(f"target must be categorical: {target}")
    if features is None:
        features = [c.name for c in table.columns if c.name != target]
    feature_defs = [(name, table.column(name).kind) for name in features]

    targets = [str(v) for v in table.values(target)]
    feature_values = {name: table.values(name) for name, _ in feature_defs}
    binnings = {name: fit_binning([float(v) for v in feature_values[name]], n_bins)
                for name, kind in feature_defs if kind == "num"}

    nodes: dict[int, TreeNode] = {}
    node_rows: dict[int, list[int]] = {}
    root = TreeNode(0, _class_counts(list(range(len(table.rows))), targets))
    nodes[0] = root
    node_rows[0] = list(range(len(table.rows)))
    next_id = 1
    open_leaves = [0]

    def best_split(node_id: int):
        rows = node_rows[node_id]
        if len(nodes[node_id].counts) <= 1:
            return None   # pure
        best = None
        for feature in feature_defs:
            name = feature[0]
            for gain, spec in _candidate_splits(rows, targets, feature,
                                                feature_values[name],
                                                binnings.get(name),
                                                params.min_leaf_size):
                if best is None or gain > best[0]:
                    best = (gain, spec)
        if best is None or best[0] < params.min_gain:
            return None
        return best

    while open_leaves:
        # best-first: expand the open leaf with the highest achievable gain
        candidates = []
        for node_id in open_leaves:
            found = best_split(node_id)
            if found is not None:
                candidates.append((found[0], node_id, found[1]))
        if not candidates:
            break
        candidates.sort(key=lambda c: (-c[0], c[1]))
        expanded = None
        leaf_count = len(open_leaves) + sum(
            1 for n in nodes.values() if n.is_leaf and n.node_id not in open_leaves)
        for gain, node_id, spec in candidates:
            name, kind, threshold, partition = spec
            growth = len(partition) - 1
            if params.max_leaves is not None and leaf_count + growth > params.max_leaves:
                continue
            expanded = (node_id, name, kind, threshold, partition)
            break
        if expanded is None:
            break

        node_id, name, kind, threshold, partition = expanded
        open_leaves.remove(node_id)
        split = Split(attribute=name, kind=kind, threshold=threshold)
        child_sizes: list[tuple[int, int]] = []
        for branch, rows in partition.items():
            child = TreeNode(next_id, _class_counts(rows, targets))
            nodes[next_id] = child
            node_rows[next_id] = rows
            open_leaves.append(next_id)
            if kind == CATEGORICAL_SPLIT:
                split.branches[branch] = next_id
            elif branch == "<=":
                split.left = next_id
            else:
                split.right = next_id
            child_sizes.append((len(rows), next_id))
            next_id += 1
        # unseen values route to the most populated child, lowest id on ties
        split.majority_child = max(child_sizes, key=lambda s: (s[0], -s[1]))[1]
        nodes[node_id].split = split

    return TreeModel(target, feature_defs, nodes, params, binnings)


def tree_predict(model: TreeModel, record: dict) -> TreePrediction:
    """Route a record to a leaf and report (leaf id, class, probability).

    The predicted value is the leaf's majority class (lexicographically
    smallest on ties); the probability is that class's leaf frequency.
    """
    node = model.root
    while not node.is_leaf:
        split = node.split
        if split.kind == THRESHOLD_SPLIT:
            child = split.left if float(record[split.attribute]) <= split.threshold \
                else split.right
        else:
            child = split.branches.get(str(record[split.attribute]),
                                       split.majority_child)
        node = model.nodes[child]
    top = max(node.counts.values())
    value = min(cls for cls, c in node.counts.items() if c == top)
    return TreePrediction(node.node_id, node.counts[value] / node.size, value)
