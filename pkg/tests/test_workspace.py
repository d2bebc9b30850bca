"""Workspace lifecycle: generate, ingest, edit, activate, load, run, report."""

import json
from decimal import Decimal

import pytest

from cashmine.apd import parse_process
from cashmine.errors import (
    ActivationRefused,
    CashmineError,
    NotFound,
    StageError,
)
from cashmine.staging import replay_change_log
from cashmine.synthgen import GenSpec
from cashmine.templates import CASHFLOW_GL_PREDICTION, template_text
from cashmine.workspace import DEFAULT_SEED, Workspace

BAD_FILE = ("SAKNR,BUDAT,WRBTR,BELNR,LIFNR\n"
            "250000,20120815,100,1226000001,200001\n"
            "250000,20121340,100,1226000002,200001\n")


def test_ensure_creates_layout(tmp_path):
    ws = Workspace.ensure(tmp_path / "ws")
    for sub in ("files", "psa", "dso", "cube", "runs"):
        assert (tmp_path / "ws" / sub).is_dir()


def test_generate_writes_named_source(ws):
    name, count = ws.generate(GenSpec(seed=3, n_records=25))
    assert name == "synthetic-s3.csv"
    assert count == 25
    assert (ws.files_dir / name).exists()


def test_safe_names_enforced(ws):
    with pytest.raises(CashmineError):
        ws.add_source_file("../escape.csv", "x")
    with pytest.raises(CashmineError):
        ws.add_source_file(".hidden", "x")


def test_ingest_stages_request_and_sidecar(ws):
    ws.add_source_file("in.csv", BAD_FILE)
    result = ws.ingest("in.csv")
    assert result.request_id == 1
    assert result.rows == 2
    assert result.records == 1
    assert len(result.errors) == 1
    assert (ws.psa_dir / "request_0001.json").exists()
    sidecar = (ws.psa_dir / "request_0001.errors.csv").read_text()
    assert sidecar.splitlines()[1].startswith("2,BUDAT")


def test_ingest_unknown_file(ws):
    with pytest.raises(NotFound):
        ws.ingest("nope.csv")


def test_activate_refuses_error_rows_then_edit_repairs(ws):
    ws.add_source_file("in.csv", BAD_FILE)
    rid = ws.ingest("in.csv").request_id
    with pytest.raises(ActivationRefused):
        ws.activate(rid)
    row = ws.edit(rid, 1, "BUDAT", "20120816")
    assert row.status == "edited"
    summary = ws.activate(rid)
    assert summary == {"inserted": 2, "overwritten": 0, "active": 2}


def test_activation_is_durable_and_replayable(ws, small_csv):
    ws.add_source_file("a.csv", small_csv)
    rid = ws.ingest("a.csv").request_id
    ws.activate(rid)
    # second activation of the same request overwrites every key
    summary = ws.activate(rid)
    assert summary["inserted"] == 0
    assert summary["overwritten"] == summary["active"]
    replayed = replay_change_log(ws.change_log())
    active = ws._load_dso().active
    assert {k: v.record for k, v in replayed.items()} == \
           {k: v.record for k, v in active.items()}
    assert all(v.version == 2 for v in replayed.values())


def test_load_cube_requires_activation(ws, small_csv):
    with pytest.raises(StageError):
        ws.load_cube()
    ws.add_source_file("a.csv", small_csv)
    ws.activate(ws.ingest("a.csv").request_id)
    stats = ws.load_cube()
    assert stats.facts_added == 60
    snapshot = json.loads((ws.cube_dir / "cube.json").read_text())
    assert snapshot["facts"] == 60
    assert Decimal(snapshot["total"]) > 0


def test_run_requires_cube(ws, small_csv):
    ws.add_source_file("a.csv", small_csv)
    ws.activate(ws.ingest("a.csv").request_id)
    with pytest.raises(StageError, match="load-cube"):
        ws.run("cashflow-gl-prediction")


def test_resolve_process_sources(ws):
    assert ws.resolve_process("cashflow-gl-prediction") == CASHFLOW_GL_PREDICTION
    ws.add_source_file("mine.process", "process mine\nnode a source.dso\n")
    assert ws.resolve_process("mine.process").startswith("process mine")
    inline = "process inline\nnode a source.dso\n"
    assert ws.resolve_process(inline) == inline
    with pytest.raises(NotFound):
        ws.resolve_process("missing-template")


def test_validate_surfaces_issues(ws):
    ws.add_source_file("bad.process",
                       "process bad\nnode a widget.spin\n")
    issues = ws.validate("bad.process")
    assert issues and issues[0].code == "kind"
    assert ws.validate("cashflow-gl-prediction") == []


def test_template_runs_end_to_end(loaded_ws):
    run_id, result = loaded_ws.run("cashflow-gl-prediction", seed=777)
    assert run_id == "cashflow-gl-prediction-s777"
    run_dir = loaded_ws.run_dir(run_id)
    for name in ("dt_result.csv", "cl_result.csv", "sc_result.csv",
                 "dt_result.jsonl", "manifest.json",
                 "dt_train.model.json", "cl_train.model.json",
                 "sc_train.model.json"):
        assert (run_dir / name).exists(), name
    header = (run_dir / "dt_result.csv").read_text().splitlines()[0]
    assert header == ("0CREDITOR,0GL_ACCOUNT,0PSTNG_DATE,ZAMOUNT1,"
                      "DT_PRED_NODE002,DT_PRED_PROB002,DT_PRED_VAL002")
    header = (run_dir / "cl_result.csv").read_text().splitlines()[0]
    assert header == ("0AC_DOC_NO,0CREDITOR,0GL_ACCOUNT,0PSTNG_DATE,"
                      "ZAMOUNT1,CL_PRED_CLUSTER002")
    header = (run_dir / "sc_result.csv").read_text().splitlines()[0]
    assert header == ("0AC_DOC_NO,0CREDITOR,0GL_ACCOUNT,0PSTNG_DATE,"
                      "ZAMOUNT1,SC_SCORE002")


def test_rerun_needs_force(loaded_ws):
    run_id, _ = loaded_ws.run("cashflow-gl-prediction")
    with pytest.raises(CashmineError, match="force"):
        loaded_ws.run("cashflow-gl-prediction")
    again, _ = loaded_ws.run("cashflow-gl-prediction", force=True)
    assert again == run_id


def test_default_seed_is_stable(loaded_ws):
    run_id, _ = loaded_ws.run("cashflow-gl-prediction")
    assert run_id == f"cashflow-gl-prediction-s{DEFAULT_SEED}"


def test_report_formats(loaded_ws):
    run_id, _ = loaded_ws.run("cashflow-gl-prediction", seed=5)
    text = loaded_ws.report(run_id)
    assert "== dt_result: dt_result.csv ==" in text
    assert "DT_PRED_VAL002" in text
    delimited = loaded_ws.report(run_id, fmt="delimited")
    assert "0CREDITOR,0GL_ACCOUNT" in delimited
    with pytest.raises(CashmineError):
        loaded_ws.report(run_id, fmt="yaml")
    with pytest.raises(NotFound):
        loaded_ws.report("nope-s1")


def test_status_reflects_progress(ws, small_csv):
    empty = ws.status()
    assert empty["requests"] == 0
    assert empty["active_records"] == 0
    assert not empty["cube_loaded"]
    ws.add_source_file("a.csv", small_csv)
    ws.activate(ws.ingest("a.csv").request_id)
    ws.load_cube()
    run_id, _ = ws.run("cashflow-gl-prediction", seed=2)
    status = ws.status()
    assert status["requests"] == 1
    assert status["active_records"] == 60
    assert status["cube_loaded"]
    assert status["runs"] == [run_id]
    assert "a.csv" in status["files"]


def test_template_text_and_parseability():
    assert template_text("cashflow-gl-prediction") is not None
    assert template_text("bogus") is None
    process = parse_process(CASHFLOW_GL_PREDICTION)
    assert process.name == "cashflow-gl-prediction"
    ids = [n.node_id for n in process.nodes]
    assert ids == ["extract", "dt_data", "dt_split", "dt_train", "dt_apply",
                   "dt_result", "dt_feed", "cl_train", "cl_apply",
                   "cl_result", "cl_influence", "cl_inter", "cl_intra",
                   "gl_dist", "sc_train", "sc_apply", "sc_result", "sc_chart"]
