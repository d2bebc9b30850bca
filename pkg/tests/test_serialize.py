"""Model artifact persistence: tagged JSON, exact reconstruction."""

import json

import pytest

from cashmine.errors import NotFound
from cashmine.mining import (
    TreeParams,
    apriori_fit,
    kmeans_fit,
    load_model,
    regression_fit,
    save_model,
    tree_fit,
    tree_predict,
)
from cashmine.mining.features import Attribute, FeatureSpace, NUMERIC
from cashmine.tables import NUM

from conftest import make_table

RAW_X = FeatureSpace((Attribute("X", NUMERIC),))


def test_cluster_round_trip(tmp_path):
    table = make_table(["X"], [(0.0,), (1.0,), (10.0,), (11.0,)],
                       kinds={"X": NUM})
    model = kmeans_fit(table, RAW_X, k=2, seed=3)
    path = tmp_path / "cl.model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded == model


def test_tree_round_trip_preserves_predictions(tmp_path):
    table = make_table(["V", "X", "Y"],
                       [("p", 1.0, "x"), ("p", 9.0, "z"), ("q", 5.0, "x")],
                       kinds={"X": NUM})
    model = tree_fit(table, "Y", TreeParams(max_leaves=4))
    path = tmp_path / "dt.model.json"
    save_model(model, path)
    loaded = load_model(path)
    for record in ({"V": "p", "X": 1.0}, {"V": "q", "X": 8.0},
                   {"V": "new", "X": 5.0}):
        assert tree_predict(loaded, record) == tree_predict(model, record)


def test_regression_round_trip(tmp_path):
    table = make_table(["X", "Y"], [(1.0, 2.0), (2.0, 4.0)],
                       kinds={"X": NUM, "Y": NUM})
    model = regression_fit(table, "X", "Y")
    save_model(model, tmp_path / "sc.model.json")
    assert load_model(tmp_path / "sc.model.json") == model


def test_apriori_round_trip(tmp_path):
    table = make_table(["a", "b"], [("1", "x"), ("1", "y"), ("2", "x")])
    model = apriori_fit(table, min_support=0.3, min_confidence=0.5)
    save_model(model, tmp_path / "ar.model.json")
    assert load_model(tmp_path / "ar.model.json") == model


def test_artifact_is_tagged_sorted_json(tmp_path):
    table = make_table(["X", "Y"], [(1.0, 2.0)], kinds={"X": NUM, "Y": NUM})
    save_model(regression_fit(table, "X", "Y"), tmp_path / "m.json")
    text = (tmp_path / "m.json").read_text()
    assert text.endswith("\n")
    data = json.loads(text)
    assert data["model_kind"] == "regression"
    assert text == json.dumps(data, sort_keys=True, indent=1) + "\n"


def test_save_is_byte_deterministic(tmp_path):
    table = make_table(["X"], [(0.0,), (5.0,), (9.0,)], kinds={"X": NUM})
    model = kmeans_fit(table, RAW_X, k=2, seed=7)
    save_model(model, tmp_path / "a.json")
    save_model(model, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_unknown_artifacts_rejected(tmp_path):
    with pytest.raises(NotFound):
        load_model(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"model_kind": "mystery"}')
    with pytest.raises(NotFound):
        load_model(bad)
    with pytest.raises(TypeError):
        save_model(object(), tmp_path / "x.json")
