"""Decision-tree induction and prediction."""

import math

import pytest

from cashmine.errors import FitError
from cashmine.mining.tree import TreeParams, tree_fit, tree_predict
from cashmine.tables import NUM

from conftest import make_table


def test_perfect_categorical_split():
    table = make_table(["V", "Y"],
                       [("p", "x"), ("p", "x"), ("q", "z"), ("q", "z")])
    model = tree_fit(table, "Y")
    assert model.root.split.attribute == "V"
    assert model.root.split.kind == "categorical"
    assert len(model.leaves()) == 2
    p = tree_predict(model, {"V": "p"})
    assert (p.value, p.probability) == ("x", 1.0)
    assert tree_predict(model, {"V": "q"}).value == "z"


def test_branches_in_sorted_value_order_with_sequential_ids():
    table = make_table(["V", "Y"],
                       [("c", "x"), ("a", "y"), ("b", "z")])
    model = tree_fit(table, "Y")
    assert model.root.split.branches == {"a": 1, "b": 2, "c": 3}


def test_pure_target_stays_root_only():
    table = make_table(["V", "Y"], [("p", "x"), ("q", "x")])
    model = tree_fit(table, "Y")
    assert model.root.is_leaf
    assert tree_predict(model, {"V": "anything"}).node_id == 0


def test_numeric_threshold_split():
    rows = [(float(x), "lo" if x < 50 else "hi") for x in range(0, 100, 5)]
    table = make_table(["X", "Y"], rows, kinds={"X": NUM})
    model = tree_fit(table, "Y", n_bins=10)
    split = model.root.split
    assert split.kind == "threshold"
    assert split.attribute == "X"
    # equal-width edges over [0, 95]; the best cut separates the classes
    assert tree_predict(model, {"X": 10.0}).value == "lo"
    assert tree_predict(model, {"X": 90.0}).value == "hi"


def test_leaf_probability_is_class_frequency():
    # 11-of-14 majority in a single leaf
    rows = [("p", "x")] * 11 + [("p", "z")] * 3
    table = make_table(["V", "Y"], rows)
    model = tree_fit(table, "Y")
    p = tree_predict(model, {"V": "p"})
    assert p.value == "x"
    assert p.probability == pytest.approx(11 / 14)


def test_prediction_tie_breaks_on_smallest_class():
    table = make_table(["V", "Y"], [("p", "z"), ("p", "a")])
    model = tree_fit(table, "Y")
    assert tree_predict(model, {"V": "p"}).value == "a"


def test_unseen_value_routes_to_majority_child():
    rows = [("p", "x")] * 3 + [("q", "z")] * 1
    model = tree_fit(make_table(["V", "Y"], rows), "Y")
    assert tree_predict(model, {"V": "unseen"}).value == "x"


def test_zero_gain_splits_grow_by_default():
    # xor needs a zero-gain first split; min_gain=0 allows it
    table = make_table(["A", "B", "Y"],
                       [("0", "0", "n"), ("0", "1", "y"),
                        ("1", "0", "y"), ("1", "1", "n")])
    model = tree_fit(table, "Y")
    assert len(model.leaves()) == 4
    for a, b, y in table.rows:
        assert tree_predict(model, {"A": a, "B": b}).value == y


def test_min_gain_stops_zero_gain_growth():
    table = make_table(["A", "B", "Y"],
                       [("0", "0", "n"), ("0", "1", "y"),
                        ("1", "0", "y"), ("1", "1", "n")])
    model = tree_fit(table, "Y", TreeParams(min_gain=1e-6))
    assert model.root.is_leaf


def test_max_leaves_budget_respected():
    rows = [(v, t) for v, t in zip("abcdef", "xyzxyz")]
    model = tree_fit(make_table(["V", "Y"], rows), "Y",
                     TreeParams(max_leaves=3))
    # 6-way split would need 6 leaves; the budget forbids expansion
    assert sum(1 for n in model.nodes.values() if n.is_leaf) <= 3


def test_min_leaf_size_blocks_thin_branches():
    rows = [("p", "x")] * 5 + [("q", "z")]
    model = tree_fit(make_table(["V", "Y"], rows), "Y",
                     TreeParams(min_leaf_size=2))
    assert model.root.is_leaf


def test_distribution_sums_to_one_on_every_leaf():
    rows = [("p", "x")] * 4 + [("p", "z")] * 2 + [("q", "z")] * 3
    model = tree_fit(make_table(["V", "Y"], rows), "Y")
    for leaf in model.leaves():
        assert sum(leaf.distribution().values()) == pytest.approx(1.0)


def test_best_first_ids_follow_expansion_order():
    # strongest split expands first, so ids 1.. follow gain order
    rows = ([("p", "m", "x")] * 4 + [("q", "m", "z")] * 4
            + [("p", "n", "x")] * 1 + [("q", "n", "x")] * 1)
    model = tree_fit(make_table(["V", "W", "Y"], rows), "Y")
    assert model.root.split is not None
    ids = sorted(model.nodes)
    assert ids == list(range(len(ids)))


def test_rejects_empty_and_numeric_target():
    with pytest.raises(FitError):
        tree_fit(make_table(["V", "Y"], []), "Y")
    table = make_table(["V", "Y"], [("p", 1.0)], kinds={"Y": NUM})
    with pytest.raises(FitError):
        tree_fit(table, "Y")


def test_entropy_gain_prefers_informative_attribute():
    # V fully determines Y; W is uninformative noise
    rows = [("p", "m", "x"), ("p", "n", "x"), ("q", "m", "z"), ("q", "n", "z")]
    model = tree_fit(make_table(["V", "W", "Y"], rows), "Y")
    assert model.root.split.attribute == "V"
    assert len(model.leaves()) == 2


def test_train_accuracy_is_perfect_when_rows_are_separable():
    import random
    rng = random.Random(5)
    rows = []
    for i in range(120):
        v = f"v{rng.randrange(8)}"
        w = f"w{rng.randrange(3)}"
        rows.append((v, w, f"class-{hash(v) % 4}"))
    table = make_table(["V", "W", "Y"], rows)
    model = tree_fit(table, "Y")
    hits = sum(tree_predict(model, table.record(i)).value == rows[i][2]
               for i in range(len(rows)))
    assert hits == len(rows)
