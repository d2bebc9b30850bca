"""HTTP endpoints over a workspace, exercised in-process."""

import pytest
from starlette.testclient import TestClient

from cashmine.service import create_app
from cashmine.synthgen import GenSpec, generate


@pytest.fixture
def client(tmp_path):
    with TestClient(create_app(tmp_path / "ws")) as c:
        yield c


@pytest.fixture
def loaded_client(client):
    """Client whose workspace has 80 records activated and cubed."""
    client.post("/generate", json={"seed": 4, "records": 80})
    rid = client.post("/ingest",
                      json={"file": "synthetic-s4.csv"}).json()["request_id"]
    client.post(f"/activate/{rid}")
    client.post("/load-cube")
    return client


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_generate_and_status(client):
    resp = client.post("/generate", json={"seed": 9, "records": 30})
    assert resp.status_code == 200
    assert resp.json() == {"file": "synthetic-s9.csv", "records": 30}
    status = client.get("/status").json()
    assert status["files"] == ["synthetic-s9.csv"]
    assert status["requests"] == 0


def test_generate_from_spec_text(client):
    resp = client.post("/generate", json={
        "spec_text": "seed = 2\nrecords = 12\n", "name": "tiny.csv"})
    assert resp.json() == {"file": "tiny.csv", "records": 12}


def test_generate_bad_spec_is_400(client):
    resp = client.post("/generate", json={"spec_text": "records = -1\n"})
    assert resp.status_code == 400
    assert "records" in resp.json()["detail"]


def test_ingest_by_upload(client):
    content = generate(GenSpec(seed=1, n_records=10))
    resp = client.post("/ingest", json={"name": "up.csv", "content": content})
    body = resp.json()
    assert body["request_id"] == 1
    assert body["file"] == "up.csv"
    assert body["rows"] == 10
    assert body["records"] == 10
    assert body["errors"] == []


def test_ingest_needs_file_or_content(client):
    resp = client.post("/ingest", json={})
    assert resp.status_code == 400


def test_ingest_missing_file_is_404(client):
    resp = client.post("/ingest", json={"file": "ghost.csv"})
    assert resp.status_code == 404


def test_edit_then_activate_flow(client):
    bad = ("SAKNR,BUDAT,WRBTR,BELNR,LIFNR\n"
           "250000,20120815,100,1226000001,200001\n"
           "250000,20121340,100,1226000002,200001\n")
    rid = client.post("/ingest",
                      json={"name": "bad.csv", "content": bad}
                      ).json()["request_id"]
    refused = client.post(f"/activate/{rid}")
    assert refused.status_code == 409
    fixed = client.post("/edit", json={
        "request_id": rid, "row": 1, "field": "BUDAT", "value": "20120816"})
    assert fixed.json() == {"status": "edited", "error": None}
    done = client.post(f"/activate/{rid}")
    assert done.status_code == 200
    assert done.json()["active"] == 2


def test_edit_unknown_request_is_404(client):
    resp = client.post("/edit", json={
        "request_id": 99, "row": 0, "field": "BUDAT", "value": "20120816"})
    assert resp.status_code == 404


def test_load_cube_before_activation_is_409(client):
    resp = client.post("/load-cube")
    assert resp.status_code == 409
    assert "activate" in resp.json()["detail"]


def test_load_cube_reports_stats(loaded_client):
    status = loaded_client.get("/status").json()
    assert status["cube_loaded"]
    assert status["active_records"] == 80


def test_validate_endpoint(client):
    good = client.post("/validate",
                       json={"process": "cashflow-gl-prediction"}).json()
    assert good == {"ok": True, "issues": []}
    bad = client.post("/validate", json={
        "process": "process p\nnode a widget.spin\n"}).json()
    assert not bad["ok"]
    assert "unknown node kind" in bad["issues"][0]


def test_run_and_report(loaded_client):
    resp = loaded_client.post("/run", json={
        "process": "cashflow-gl-prediction", "seed": 11})
    assert resp.status_code == 200
    body = resp.json()
    assert body["run_id"] == "cashflow-gl-prediction-s11"
    assert "dt_result.csv" in body["artifacts"]["dt_result"]
    assert body["models"]["dt_train"] == "dt_train.model.json"
    report = loaded_client.get(f"/report/{body['run_id']}")
    assert report.status_code == 200
    assert "== dt_result: dt_result.csv ==" in report.json()["body"]
    delim = loaded_client.get(
        f"/report/{body['run_id']}", params={"format": "delimited"})
    assert "0CREDITOR,0GL_ACCOUNT" in delim.json()["body"]


def test_run_before_cube_is_409(client):
    resp = client.post("/run", json={"process": "cashflow-gl-prediction"})
    assert resp.status_code == 409


def test_rerun_without_force_is_400_then_force_works(loaded_client):
    first = loaded_client.post("/run", json={
        "process": "cashflow-gl-prediction", "seed": 3})
    assert first.status_code == 200
    again = loaded_client.post("/run", json={
        "process": "cashflow-gl-prediction", "seed": 3})
    assert again.status_code == 400
    assert "force" in again.json()["detail"]
    forced = loaded_client.post("/run", json={
        "process": "cashflow-gl-prediction", "seed": 3, "force": True})
    assert forced.status_code == 200


def test_failed_run_is_500(loaded_client):
    # the model artifact is only opened at runtime, after validation
    process = (
        "process broken\n"
        "node ex source.cube_extract\n"
        "  attributes = 0GL_ACCOUNT\n"
        "  key_figure = ZAMOUNT1\n"
        "node ap model.apply\n"
        "  model_path = ghost.model.json\n"
        "node out sink.file\n"
        "  name = out.csv\n"
        "edge ex -> ap:data\n"
        "edge ap -> out\n")
    resp = loaded_client.post("/run", json={"process": process})
    assert resp.status_code == 500
    assert "node failure" in resp.json()["detail"]
    assert "ap" in resp.json()["detail"]


def test_report_unknown_run_is_404(client):
    assert client.get("/report/nope-s1").status_code == 404


def test_report_unknown_format_is_400(loaded_client):
    run_id = loaded_client.post("/run", json={
        "process": "cashflow-gl-prediction"}).json()["run_id"]
    resp = loaded_client.get(f"/report/{run_id}", params={"format": "yaml"})
    assert resp.status_code == 400
