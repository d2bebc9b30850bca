"""Synthetic source data: determinism, planted structure, spec parsing."""

import datetime
from decimal import Decimal

import pytest

from cashmine.errors import GenError
from cashmine.ingest import parse_source_file
from cashmine.synthgen import (
    GenSpec,
    generate,
    generate_records,
    gl_pool,
    parse_genspec,
    vendor_rule,
)


def test_same_spec_same_bytes():
    spec = GenSpec(seed=7, n_records=50)
    assert generate(spec) == generate(spec)


def test_different_seed_different_data():
    a = generate(GenSpec(seed=1, n_records=50))
    b = generate(GenSpec(seed=2, n_records=50))
    assert a != b


def test_output_parses_cleanly():
    records, errors = parse_source_file(generate(GenSpec(seed=3, n_records=40)))
    assert errors == []
    assert len(records) == 40


def test_document_numbers_are_sequential():
    records = generate_records(GenSpec(seed=3, n_records=5))
    assert [r.document_no for r in records] == [
        "1226000001", "1226000002", "1226000003", "1226000004", "1226000005"]


def test_field_conventions(small_records, small_spec):
    pool = set(gl_pool(small_spec))
    vendors = {str(200001 + i) for i in range(small_spec.n_vendors)}
    lo, hi = small_spec.amount_range
    for r in small_records:
        assert r.company_code == "1000"
        assert r.currency == "INR"
        assert r.business_head == "OPER"
        assert r.gl_account in pool
        assert r.vendor in vendors
        assert lo <= r.amount_lc <= hi
        assert datetime.date(2012, 8, 1) <= r.posting_date <= datetime.date(2012, 9, 30)
        assert r.customer is None


def test_flip_zero_respects_rule():
    spec = GenSpec(seed=9, n_records=200, flip_probability=0.0)
    rule = vendor_rule(spec)
    for r in generate_records(spec):
        assert r.gl_account == rule[r.vendor]


def test_flip_probability_breaks_rule_sometimes():
    spec = GenSpec(seed=9, n_records=400, flip_probability=0.3,
                   n_vendors=10, n_gl_accounts=5)
    rule = vendor_rule(spec)
    flips = sum(1 for r in generate_records(spec)
                if r.gl_account != rule[r.vendor])
    assert 60 <= flips <= 180  # ~120 expected


def test_explicit_rule_accepted_and_validated():
    spec = GenSpec(seed=1, n_records=10, n_vendors=2, n_gl_accounts=2,
                   rule={"200001": "250010", "200002": "250000"})
    assert vendor_rule(spec) == {"200001": "250010", "200002": "250000"}
    bad = GenSpec(seed=1, n_records=10, n_vendors=2, n_gl_accounts=2,
                  rule={"200001": "999999"})
    with pytest.raises(GenError, match="outside the G/L pool"):
        vendor_rule(bad)


def test_spec_validation():
    with pytest.raises(GenError):
        GenSpec(n_records=0)
    with pytest.raises(GenError):
        GenSpec(n_vendors=0)
    with pytest.raises(GenError):
        GenSpec(flip_probability=1.5)
    with pytest.raises(GenError):
        GenSpec(amount_range=(Decimal("10"), Decimal("5")))
    with pytest.raises(GenError):
        GenSpec(date_range=(datetime.date(2012, 9, 1),
                            datetime.date(2012, 8, 1)))


class TestParseGenspec:
    def test_full_spec(self):
        spec = parse_genspec(
            "# synthetic run\n"
            "seed = 99\n"
            "records = 250\n"
            "vendors = 6\n"
            "gls = 3\n"
            "flip = 0.1\n"
            "amounts = 100..5000\n"
            "dates = 20120801..20120815\n"
            "company = 2000\n"
            "currency = EUR\n"
            "heads = OPER, FIN\n")
        assert spec.seed == 99
        assert spec.n_records == 250
        assert spec.n_vendors == 6
        assert spec.n_gl_accounts == 3
        assert spec.flip_probability == 0.1
        assert spec.amount_range == (Decimal("100"), Decimal("5000"))
        assert spec.date_range == (datetime.date(2012, 8, 1),
                                   datetime.date(2012, 8, 15))
        assert spec.company_code == "2000"
        assert spec.business_heads == ("OPER", "FIN")

    def test_empty_text_gives_defaults(self):
        spec = parse_genspec("")
        assert spec == GenSpec()

    def test_unknown_key_rejected_with_line_number(self):
        with pytest.raises(GenError, match="line 2"):
            parse_genspec("seed = 1\nbogus = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(GenError, match="key = value"):
            parse_genspec("seed 1\n")

    def test_bad_value_rejected(self):
        with pytest.raises(GenError, match="bad spec value"):
            parse_genspec("records = many\n")
        with pytest.raises(GenError, match="bad spec value"):
            parse_genspec("dates = 2012..2013\n")
