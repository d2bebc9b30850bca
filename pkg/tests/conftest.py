"""Shared fixtures for the test suite."""

import pytest

from cashmine.synthgen import GenSpec, generate, generate_records
from cashmine.tables import Column, Table
from cashmine.workspace import Workspace


@pytest.fixture
def small_spec():
    return GenSpec(seed=7, n_records=60, n_vendors=5, n_gl_accounts=4)


@pytest.fixture
def small_records(small_spec):
    return generate_records(small_spec)


@pytest.fixture
def small_csv(small_spec):
    return generate(small_spec)


@pytest.fixture
def ws(tmp_path):
    return Workspace.ensure(tmp_path / "ws")


@pytest.fixture
def loaded_ws(ws, small_csv):
    """Workspace with 60 synthetic records activated and loaded into the cube."""
    ws.add_source_file("input.csv", small_csv)
    result = ws.ingest("input.csv")
    ws.activate(result.request_id)
    ws.load_cube()
    return ws


def make_table(names, rows, kinds=None):
    kinds = kinds or {}
    cols = [Column(n, kinds[n]) if n in kinds else Column(n) for n in names]
    return Table(cols, [tuple(r) for r in rows])
