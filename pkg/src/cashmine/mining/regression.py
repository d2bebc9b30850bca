"""Linear regression through the origin.

A single-coefficient model out(x) = w * x with the least-squares solution
w = sum(x*y) / sum(x*x).  No intercept: a zero input always scores zero,
which is the behaviour wanted for amount-per-key-date estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import FitError
from ..tables import Table


@dataclass(frozen=True)
class RegressionModel:
    x_name: str
    y_name: str
    weight: float
    n: int

    def score(self, x: float) -> float:
        return self.weight * x


def regression_fit(table: Table, x_name: str, y_name: str) -> RegressionModel:
    xs = [float(v) for v in table.values(x_name)]
    ys = [float(v) for v in table.values(y_name)]
    if not xs:
        raise FitError("cannot fit a regression on an empty table")
    sum_xy = math.fsum(x * y for x, y in zip(xs, ys))
    sum_xx = math.fsum(x * x for x in xs)
    if sum_xx == 0.0:
        raise FitError(f"all values of {x_name} are zero")
    return RegressionModel(x_name, y_name, sum_xy / sum_xx, len(xs))


def regression_score(model: RegressionModel, record: dict) -> float:
    return model.score(float(record[model.x_name]))
