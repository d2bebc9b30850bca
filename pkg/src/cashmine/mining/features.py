"""Feature spaces: attribute weighting, equal-width binning, mixed distance.

The dissimilarity between two records is the square root of the weighted sum
of per-attribute terms: squared difference of min-max scaled values for
numeric attributes, 0/1 mismatch for categorical ones.  Scaling bounds are
fitted from data and stored on the space so new records are measured
consistently; a space without bounds compares raw values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..errors import DistanceError, FitError
from ..tables import NUM, Table

DEFAULT_BINS = 10

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class BinningSpec:
    """Equal-width bin boundaries over [min, max]."""

    n_bins: int
    edges: tuple[float, ...]    # n_bins + 1 boundaries

    def bin_index(self, value: float) -> int:
        """Bin of ``value``; out-of-range values clamp to the edge bins."""
        lo, hi = self.edges[0], self.edges[-1]
        if hi <= lo:
            return 0
        width = (hi - lo) / self.n_bins
        i = int((float(value) - lo) // width)
        return max(0, min(self.n_bins - 1, i))


def fit_binning(values: list[float], n_bins: int = DEFAULT_BINS) -> BinningSpec:
    """Fit equal-width edges spanning the observed range.

    Constant input collapses to one degenerate bin (a nominal unit width
    keeps the edge list strictly increasing).
    """
    if not values:
        raise FitError("cannot fit binning on empty values")
    if n_bins < 1:
        raise FitError(f"n_bins must be >= 1: {n_bins}")
    lo, hi = min(float(v) for v in values), max(float(v) for v in values)
    if hi == lo:
        return BinningSpec(1, (lo, lo + 1.0))
    width = (hi - lo) / n_bins
    edges = tuple(lo + i * width for i in range(n_bins)) + (hi,)
    return BinningSpec(n_bins, edges)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str                                  # categorical | numeric
    weight: float = 1.0
    bounds: tuple[float, float] | None = None  # min-max scaling, numeric only
    binning: BinningSpec | None = None

    def __post_init__(self):
        if self.weight < 0:
            raise FitError(f"attribute {self.name}: weight must be >= 0")
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise FitError(f"attribute {self.name}: unknown kind {self.kind}")


@dataclass(frozen=True)
class FeatureSpace:
    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        if not self.attributes:
            raise FitError("feature space needs at least one attribute")

    def attribute(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise DistanceError(f"unknown attribute: {name}")

    def numeric_names(self) -> list[str]:
        return [a.name for a in self.attributes if a.kind == NUMERIC]


def space_from_table(table: Table, attribute_names: list[str],
                     weights: dict[str, float] | None = None,
                     n_bins: int = DEFAULT_BINS,
                     fit_bounds: bool = True) -> FeatureSpace:
    """Build a feature space over table columns.

    ``num`` columns become numeric attributes with fitted min-max bounds and
    equal-width binning; everything else is categorical.
    """
    weights = weights or {}
    attrs = []
    for name in attribute_names:
        column = table.column(name)
        weight = weights.get(name, 1.0)
        if column.kind == NUM:
            values = [float(v) for v in table.values(name)]
            bounds = (min(values), max(values)) if (fit_bounds and values) else None
            binning = fit_binning(values, n_bins) if values else None
            attrs.append(Attribute(name, NUMERIC, weight, bounds, binning))
        else:
            attrs.append(Attribute(name, CATEGORICAL, weight))
    return FeatureSpace(tuple(attrs))


def scaled_value(attr: Attribute, value) -> float:
    x = float(value)
    if attr.bounds is None:
        return x
    lo, hi = attr.bounds
    if hi == lo:
        return 0.0
    return (x - lo) / (hi - lo)


def distance(a: dict, b: dict, space: FeatureSpace) -> float:
    """Weighted mixed-type dissimilarity; symmetric, zero on identity."""
    total = 0.0
    for attr in space.attributes:
        if attr.name not in a or attr.name not in b:
            raise DistanceError(f"record missing attribute: {attr.name}")
        if attr.kind == NUMERIC:
            diff = scaled_value(attr, a[attr.name]) - scaled_value(attr, b[attr.name])
            total += attr.weight * diff * diff
        else:
            total += attr.weight * (0.0 if a[attr.name] == b[attr.name] else 1.0)
    return math.sqrt(total)


def rebind_bounds(space: FeatureSpace, table: Table) -> FeatureSpace:
    """Return a copy of ``space`` with numeric bounds/binning fitted on ``table``."""
    attrs = []
    for attr in space.attributes:
        if attr.kind == NUMERIC:
            values = [float(v) for v in table.values(attr.name)]
            attrs.append(replace(
                attr,
                bounds=(min(values), max(values)) if values else None,
                binning=fit_binning(values, attr.binning.n_bins
                                    if attr.binning else DEFAULT_BINS)
                if values else None,
            ))
        else:
            attrs.append(attr)
    return FeatureSpace(tuple(attrs))
