"""Model evaluation: train/test split, accuracy, cluster diagnostics.

The split is a seeded shuffle with a round-half-up train size, so the same
seed always yields the same partition.  Cluster diagnostics cover attribute
influence (how strongly each attribute separates the clusters), inter/intra
centroid distances, and what-if re-prediction under record overrides.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .errors import EvalError, SplitError
from .mining.cluster import ClusterModel, cluster_assign
from .mining.features import CATEGORICAL, FeatureSpace, fit_binning
from .mining.regression import RegressionModel, regression_score
from .mining.tree import TreeModel, tree_predict
from .tables import Table


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.66
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise SplitError(f"train_fraction out of range: {self.train_fraction}")


def train_size(n: int, fraction: float) -> int:
    # round-half-up, exact in decimal so 25 * 0.66 = 16.5 rounds to 17
    scaled = Decimal(n) * Decimal(str(fraction))
    return int(scaled.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def train_test_split(table: Table, spec: SplitSpec) -> tuple[Table, Table]:
    """Disjoint, exhaustive partition; row order within each side preserved."""
    n = len(table.rows)
    if n < 2:
        raise SplitError(f"need at least 2 rows to split, got {n}")
    indices = list(range(n))
    random.Random(spec.seed).shuffle(indices)
    k = train_size(n, spec.train_fraction)
    chosen = sorted(indices[:k])
    rest = sorted(indices[k:])
    train = Table(list(table.columns), [table.rows[i] for i in chosen])
    test = Table(list(table.columns), [table.rows[i] for i in rest])
    return train, test


def accuracy(model: TreeModel, test: Table, target: str | None = None) -> float:
    if not test.rows:
        raise EvalError("cannot score an empty test table")
    target = target or model.target
    actual = [str(v) for v in test.values(target)]
    hits = sum(1 for i in range(len(test.rows))
               if tree_predict(model, test.record(i)).value == actual[i])
    return hits / len(test.rows)


@dataclass(frozen=True)
class InfluenceChart:
    scores: tuple[tuple[str, float], ...]    # (attribute, score), descending

    def score(self, name: str) -> float:
        for attr, s in self.scores:
            if attr == name:
                return s
        raise EvalError(f"unknown attribute: {name}")


def _symbolize(attr, values):
    """Comparable symbols per attribute: raw strings, or bin ids for numerics."""
    if attr.kind == CATEGORICAL:
        return [str(v) for v in values]
    binning = attr.binning or fit_binning([float(v) for v in values])
    return [binning.bin_index(float(v)) for v in values]


def _distribution(symbols) -> dict:
    counts: dict = {}
    for s in symbols:
        counts[s] = counts.get(s, 0) + 1
    n = len(symbols)
    return {s: c / n for s, c in counts.items()}


def influence_chart(model: ClusterModel, table: Table) -> InfluenceChart:
    """Per-attribute dominance: how far cluster value distributions sit from
    the global one (total variation), size-weighted, scaled so the top
    attribute scores 1.  Constant attributes score 0.
    """
    if model.space is None:
        raise EvalError("model carries no feature space")
    if len(model.labels) != len(table.rows):
        raise EvalError(f"{len(model.labels)} labels for {len(table.rows)} rows")
    assigned = [i for i, label in enumerate(model.labels) if label >= 0]
    if not assigned:
        raise EvalError("no clustered rows to evaluate")
    clusters: dict[int, list[int]] = {}
    for i in assigned:
        clusters.setdefault(model.labels[i], []).append(i)

    raw: dict[str, float] = {}
    for attr in model.space.attributes:
        values = table.values(attr.name)
        symbols = _symbolize(attr, values)
        overall = _distribution([symbols[i] for i in assigned])
        score = 0.0
        for members in clusters.values():
            local = _distribution([symbols[i] for i in members])
            tv = 0.5 * sum(abs(local.get(s, 0.0) - overall.get(s, 0.0))
                           for s in set(local) | set(overall))
            score += len(members) / len(assigned) * tv
        raw[attr.name] = score

    top = max(raw.values())
    if top > 0.0:
        raw = {name: s / top for name, s in raw.items()}
    ordered = tuple(sorted(raw.items(), key=lambda item: (-item[1], item[0])))
    return InfluenceChart(ordered)


def largest_cluster(model: ClusterModel) -> int:
    if not model.sizes:
        raise EvalError("model has no clusters")
    top = max(model.sizes)
    return model.sizes.index(top)


@dataclass(frozen=True)
class DistanceReport:
    inter: tuple[tuple[float, ...], ...]     # k x k, symmetric, zero diagonal
    intra: tuple[float, ...]                 # mean member-to-centroid distance


def distance_report(model: ClusterModel, table: Table) -> DistanceReport:
    from .mining.cluster import records_from_table
    from .mining.features import distance

    if not model.centroids:
        raise EvalError("model has no centroids")
    if model.space is None:
        raise EvalError("model carries no feature space")
    space: FeatureSpace = model.space
    k = len(model.centroids)
    inter = tuple(
        tuple(0.0 if i == j else distance(model.centroids[i], model.centroids[j], space)
              for j in range(k))
        for i in range(k))

    records = records_from_table(table, space)
    if len(model.labels) != len(records):
        raise EvalError(f"{len(model.labels)} labels for {len(records)} rows")
    sums = [0.0] * k
    counts = [0] * k
    for record, label in zip(records, model.labels):
        if label < 0:
            continue
        sums[label] += distance(record, model.centroids[label], space)
        counts[label] += 1
    intra = tuple(sums[i] / counts[i] if counts[i] else 0.0 for i in range(k))
    return DistanceReport(inter, intra)


@dataclass(frozen=True)
class WhatIf:
    baseline: object
    modified: object
    overrides: dict

    @property
    def changed(self) -> bool:
        return self.baseline != self.modified


def _model_attributes(model) -> list[str]:
    if isinstance(model, TreeModel):
        return [name for name, _ in model.features]
    if isinstance(model, ClusterModel):
        if model.space is None:
            raise EvalError("model carries no feature space")
        return [a.name for a in model.space.attributes]
    if isinstance(model, RegressionModel):
        return [model.x_name]
    raise EvalError(f"cannot run what-if on {type(model).__name__}")


def what_if(model, record: dict, overrides: dict) -> WhatIf:
    """Re-run the model's predict path with overridden attribute values."""
    known = _model_attributes(model)
    for name in overrides:
        if name not in known:
            raise EvalError(f"unknown attribute: {name}")
    modified_record = dict(record)
    modified_record.update(overrides)

    if isinstance(model, TreeModel):
        baseline = tree_predict(model, record)
        modified = tree_predict(model, modified_record)
    elif isinstance(model, ClusterModel):
        baseline = cluster_assign(model, record)
        modified = cluster_assign(model, modified_record)
    else:
        baseline = regression_score(model, record)
        modified = regression_score(model, modified_record)
    return WhatIf(baseline, modified, dict(overrides))
