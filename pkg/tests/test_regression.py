"""Single-coefficient least squares through the origin."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from cashmine.errors import FitError
from cashmine.mining.regression import (
    RegressionModel,
    regression_fit,
    regression_score,
)
from cashmine.tables import NUM

from conftest import make_table


def xy_table(pairs):
    return make_table(["X", "Y"], [(float(x), float(y)) for x, y in pairs],
                      kinds={"X": NUM, "Y": NUM})


def test_exact_linear_data_recovers_slope():
    model = regression_fit(xy_table([(1, 2), (2, 4), (3, 6)]), "X", "Y")
    assert model.weight == pytest.approx(2.0)
    assert model.n == 3


def test_closed_form_matches_normal_equation():
    rng = random.Random(11)
    pairs = [(rng.uniform(-50, 50), rng.uniform(-50, 50)) for _ in range(40)]
    model = regression_fit(xy_table(pairs), "X", "Y")
    expected = (math.fsum(x * y for x, y in pairs)
                / math.fsum(x * x for x, _ in pairs))
    assert model.weight == pytest.approx(expected, abs=1e-12)


def test_score_is_linear_with_zero_intercept():
    model = RegressionModel("X", "Y", weight=1.5, n=10)
    assert model.score(0.0) == 0.0
    assert model.score(4.0) == 6.0
    assert regression_score(model, {"X": "4"}) == 6.0


def test_empty_table_rejected():
    with pytest.raises(FitError):
        regression_fit(xy_table([]), "X", "Y")


def test_all_zero_x_rejected():
    with pytest.raises(FitError):
        regression_fit(xy_table([(0, 1), (0, 2)]), "X", "Y")


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                min_size=1, max_size=60))
def test_fitted_w_minimizes_sse(pairs):
    xs = [x for x, _ in pairs]
    if math.fsum(x * x for x in xs) == 0.0:
        return
    model = regression_fit(xy_table(pairs), "X", "Y")

    def sse(w):
        return math.fsum((y - w * x) ** 2 for x, y in pairs)

    base = sse(model.weight)
    for delta in (-1e-3, 1e-3):
        assert base <= sse(model.weight + delta) + 1e-9 * max(1.0, base)
