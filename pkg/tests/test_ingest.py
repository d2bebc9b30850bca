"""Extract parsing: defaults, row errors, serialization, deltas."""

import datetime
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from cashmine.errors import DefaultError, KeyConflict, SchemaError, ValidationError
from cashmine.ingest import (
    apply_defaults,
    compute_delta,
    parse_source_file,
    serialize_transactions,
    write_error_sidecar,
)

FULL_ROW = {
    "BUKRS": "1000", "SAKNR": "250000", "BUDAT": "20120815",
    "BIZ_HEAD": "OPER", "WRBTR": "1500.50", "BELNR": "1226000001",
    "GJAHR": "2012", "LIFNR": "200001", "KUNNR": "", "WAERS": "INR",
}


def test_apply_defaults_full_row():
    txn = apply_defaults(dict(FULL_ROW))
    assert txn.company_code == "1000"
    assert txn.posting_date == datetime.date(2012, 8, 15)
    assert txn.amount_lc == Decimal("1500.50")
    assert txn.fiscal_year == 2012
    assert txn.vendor == "200001"
    assert txn.customer is None
    assert txn.key == ("1000", "1226000001", 2012)


def test_apply_defaults_fills_missing():
    values = dict(FULL_ROW)
    for name in ("BUKRS", "BIZ_HEAD", "GJAHR", "WAERS"):
        del values[name]
    txn = apply_defaults(values)
    assert txn.company_code == "1000"
    assert txn.business_head == "OPER"
    assert txn.fiscal_year == 2012
    assert txn.currency == "INR"


def test_apply_defaults_missing_required_is_default_error():
    values = dict(FULL_ROW)
    values["BELNR"] = ""
    with pytest.raises(DefaultError) as exc:
        apply_defaults(values)
    assert exc.value.field == "BELNR"


def test_apply_defaults_names_bad_field():
    values = dict(FULL_ROW)
    values["BUDAT"] = "20121332"
    with pytest.raises(ValidationError, match="^BUDAT: "):
        apply_defaults(values)


def test_field_value_canonical_forms():
    txn = apply_defaults(dict(FULL_ROW))
    assert txn.field_value("BUDAT") == "20120815"
    assert txn.field_value("WRBTR") == "1500.5"
    assert txn.field_value("KUNNR") == ""
    assert txn.field_value("GJAHR") == "2012"


class TestParseSourceFile:
    def test_happy_path(self):
        text = ("SAKNR,BUDAT,WRBTR,BELNR,LIFNR\n"
                "250000,20120815,1500.50,1226000001,200001\n"
                "250010,20120816,99,1226000002,200002\n")
        records, errors = parse_source_file(text)
        assert errors == []
        assert [r.gl_account for r in records] == ["250000", "250010"]
        assert records[1].amount_lc == Decimal("99.00")

    def test_accepts_bytes(self):
        text = "SAKNR,BUDAT,WRBTR,BELNR\n250000,20120815,10,1\n"
        records, errors = parse_source_file(text.encode("utf-8"))
        assert len(records) == 1 and not errors

    def test_bad_rows_become_parse_errors(self):
        text = ("SAKNR,BUDAT,WRBTR,BELNR\n"
                "250000,20120815,10,1226000001\n"
                "250000,20121332,10,1226000002\n"   # bad date
                "250000,20120815,abc,1226000003\n"  # bad amount
                "250000,20120815,10,\n")            # missing doc no
        records, errors = parse_source_file(text)
        assert len(records) == 1
        assert [(e.row, e.field) for e in errors] == [
            (2, "BUDAT"), (3, "WRBTR"), (4, "BELNR")]
        assert errors[2].reason == "missing required value"
        # raw values survive for repair
        assert errors[0].values["BUDAT"] == "20121332"

    def test_record_plus_error_count_matches_rows(self):
        text = ("SAKNR,BUDAT,WRBTR,BELNR\n"
                + "\n".join(f"250000,20120815,{a},{i}" for i, a in
                            enumerate(["10", "x", "20", "y", "30"])) + "\n")
        records, errors = parse_source_file(text)
        assert len(records) + len(errors) == 5

    def test_unknown_header_is_fatal(self):
        with pytest.raises(SchemaError, match="unknown header"):
            parse_source_file("SAKNR,NOPE\n250000,1\n")

    def test_duplicate_header_is_fatal(self):
        with pytest.raises(SchemaError, match="duplicate header"):
            parse_source_file("SAKNR,SAKNR\n250000,250000\n")

    def test_empty_file_is_fatal(self):
        with pytest.raises(SchemaError, match="empty file"):
            parse_source_file("")

    def test_bad_utf8_is_fatal(self):
        with pytest.raises(SchemaError, match="UTF-8"):
            parse_source_file(b"SAKNR\n\xff\xfe\n")

    def test_short_rows_get_empty_cells(self):
        # trailing fields not present in the row default as usual
        text = "SAKNR,BUDAT,WRBTR,BELNR,LIFNR\n250000,20120815,10,7\n"
        records, errors = parse_source_file(text)
        assert not errors
        assert records[0].vendor is None


def test_serialize_round_trip():
    text = ("BUKRS,SAKNR,BUDAT,BIZ_HEAD,WRBTR,BELNR,GJAHR,LIFNR,KUNNR,WAERS\n"
            "1000,250000,20120815,OPER,1500.5,1226000001,2012,200001,,INR\n")
    records, errors = parse_source_file(text)
    assert not errors
    assert serialize_transactions(records) == text
    again, _ = parse_source_file(serialize_transactions(records))
    assert again == records


@given(st.lists(
    st.tuples(st.integers(0, 9999), st.decimals(min_value=Decimal("0.01"),
                                                max_value=Decimal("99999"),
                                                places=2)),
    min_size=0, max_size=30, unique_by=lambda t: t[0]))
def test_serialize_parse_inverse(pairs):
    records = [apply_defaults({
        "SAKNR": "250000", "BUDAT": "20120815", "WRBTR": str(amount),
        "BELNR": str(1226000001 + doc),
    }) for doc, amount in pairs]
    parsed, errors = parse_source_file(serialize_transactions(records))
    assert not errors
    assert parsed == records


def test_write_error_sidecar(tmp_path):
    _, errors = parse_source_file(
        "SAKNR,BUDAT,WRBTR,BELNR\n250000,20121332,10,1\n")
    path = write_error_sidecar(errors, tmp_path / "errs.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "row,field,reason"
    assert lines[1].startswith("1,BUDAT,")


class TestDelta:
    def _txn(self, doc, amount):
        return apply_defaults({"SAKNR": "250000", "BUDAT": "20120815",
                               "WRBTR": str(amount), "BELNR": str(doc)})

    def test_new_and_changed(self):
        before = [self._txn(1, 10), self._txn(2, 20)]
        after = [self._txn(1, 10), self._txn(2, 25), self._txn(3, 30)]
        delta = compute_delta(before, after)
        assert [t.document_no for t in delta.new] == ["3"]
        assert [(a.document_no, b.amount_lc) for a, b in delta.changed] == [
            ("2", Decimal("25.00"))]

    def test_identical_snapshots_empty(self):
        snap = [self._txn(1, 10)]
        assert compute_delta(snap, list(snap)).is_empty()

    def test_duplicate_key_raises(self):
        with pytest.raises(KeyConflict):
            compute_delta([], [self._txn(1, 10), self._txn(1, 11)])
