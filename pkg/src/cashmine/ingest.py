"""Flat-file extraction: typed cash-flow transactions, defaults and deltas.

Extract files are comma-separated UTF-8 with a mandatory header row naming
schema fields.  Parsing never aborts mid-file: each malformed row becomes one
``ParseError`` (first offending field, reason, raw values kept so the row can
be staged and repaired later), and ``len(records) + len(errors)`` always
equals the number of data rows.
"""

from __future__ import annotations

import csv
import datetime
import io
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

from .errors import DefaultError, KeyConflict, SchemaError, ValidationError
from .schema import (
    CASHFLOW_SCHEMA,
    FieldKind,
    SourceSchema,
    format_date,
    format_money,
    parse_date,
    parse_money,
    validate_field_value,
)

# schema field name -> transaction attribute
FIELD_TO_ATTR = {
    "BUKRS": "company_code",
    "SAKNR": "gl_account",
    "BUDAT": "posting_date",
    "BIZ_HEAD": "business_head",
    "WRBTR": "amount_lc",
    "BELNR": "document_no",
    "GJAHR": "fiscal_year",
    "LIFNR": "vendor",
    "KUNNR": "customer",
    "WAERS": "currency",
}
ATTR_TO_FIELD = {v: k for k, v in FIELD_TO_ATTR.items()}


@dataclass(frozen=True)
class RawTransaction:
    """One cash-flow line item at source granularity."""

    company_code: str
    gl_account: str
    posting_date: datetime.date
    business_head: str
    amount_lc: Decimal
    document_no: str
    fiscal_year: int
    vendor: str | None
    customer: str | None
    currency: str

    @property
    def key(self) -> tuple[str, str, int]:
        """Document identity: (company_code, document_no, fiscal_year)."""
        return (self.company_code, self.document_no, self.fiscal_year)

    def field_value(self, field: str) -> str:
        """Canonical string form of one schema field."""
        attr = FIELD_TO_ATTR[field]
        value = getattr(self, attr)
        if value is None:
            return ""
        if field == "BUDAT":
            return format_date(value)
        if field == "WRBTR":
            return format_money(value)
        if field == "GJAHR":
            return f"{value:04d}"
        return str(value)

    def as_field_dict(self, schema: SourceSchema = CASHFLOW_SCHEMA) -> dict[str, str]:
        return {name: self.field_value(name) for name in schema.field_names}


@dataclass(frozen=True)
class ParseError:
    """One rejected data row: position, first offending field, reason."""

    row: int                 # 1-based data row number (header excluded)
    field: str
    reason: str
    values: dict[str, str]   # raw values as read, for later repair


@dataclass(frozen=True)
class DeltaSet:
    """Changes between two extraction snapshots, keyed by document identity."""

    new: list[RawTransaction]
    changed: list[tuple[RawTransaction, RawTransaction]]

    def is_empty(self) -> bool:
        return not self.new and not self.changed


def apply_defaults(values: dict[str, str],
                   schema: SourceSchema = CASHFLOW_SCHEMA) -> RawTransaction:
    """Fill schema defaults into a partial record and build the transaction.

    ``values`` maps field names to raw strings; missing or empty entries take
    the schema default.  A missing required field with no default raises
    ``DefaultError``; a type-invalid value raises ``ValidationError`` naming
    the field.
    """
    canonical: dict[str, str] = {}
    for field in schema.fields:
        raw = values.get(field.name, "").strip()
        if not raw:
            if field.default is not None:
                raw = field.default
            elif field.required:
                raise DefaultError(field.name)
            else:
                canonical[field.name] = ""
                continue
        try:
            canonical[field.name] = validate_field_value(field, raw)
        except ValidationError as exc:
            raise ValidationError(f"{field.name}: {exc}") from None
    return _from_canonical(canonical)


def _from_canonical(values: dict[str, str]) -> RawTransaction:
    return RawTransaction(
        company_code=values["BUKRS"],
        gl_account=values["SAKNR"],
        posting_date=parse_date(values["BUDAT"]),
        business_head=values["BIZ_HEAD"],
        amount_lc=parse_money(values["WRBTR"]),
        document_no=values["BELNR"],
        fiscal_year=int(values["GJAHR"]),
        vendor=values["LIFNR"] or None,
        customer=values["KUNNR"] or None,
        currency=values["WAERS"],
    )


def parse_source_file(source: bytes | str,
                      schema: SourceSchema = CASHFLOW_SCHEMA,
                      ) -> tuple[list[RawTransaction], list[ParseError]]:
    """Parse a delimiter-separated extract into typed transactions.

    Returns (records, errors).  Unknown or duplicate header columns are fatal
    (``SchemaError``); undecodable bytes are fatal (``SchemaError``).  Row
    problems are collected, one ``ParseError`` per bad row.
    """
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"source is not valid UTF-8: {exc}") from None
    else:
        text = source

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty file: missing header row")
    header = [h.strip() for h in header]
    known = set(schema.field_names)
    for name in header:
        if name not in known:
            raise SchemaError(f"unknown header column: {name}")
    if len(header) != len(set(header)):
        raise SchemaError("duplicate header column")

    records: list[RawTransaction] = []
    errors: list[ParseError] = []
    for row_no, cells in enumerate(reader, start=1):
        if not cells:
            continue
        values = {name: cells[i].strip() if i < len(cells) else ""
                  for i, name in enumerate(header)}
        try:
            records.append(apply_defaults(values, schema))
        except DefaultError as exc:
            errors.append(ParseError(row_no, exc.field,
                                     "missing required value", values))
        except ValidationError as exc:
            field, _, reason = str(exc).partition(": ")
            errors.append(ParseError(row_no, field, reason, values))
    return records, errors


def serialize_transactions(records: list[RawTransaction],
                           schema: SourceSchema = CASHFLOW_SCHEMA) -> str:
    """Write transactions back to the flat format (header + one row each)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(schema.field_names)
    for record in records:
        writer.writerow([record.field_value(f) for f in schema.field_names])
    return out.getvalue()


def write_error_sidecar(errors: list[ParseError], path: Path) -> Path:
    """Emit the structured parse-error report (row, field, reason)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "field", "reason"])
        for err in errors:
            writer.writerow([err.row, err.field, err.reason])
    return path


def compute_delta(previous: list[RawTransaction],
                  current: list[RawTransaction]) -> DeltaSet:
    """Diff two snapshots by document key.

    Keys only in ``current`` are new; keys in both whose non-key fields
    differ are changed; identical records are omitted.  Deletions are not
    representable.  A duplicate key inside either snapshot raises
    ``KeyConflict``.
    """
    def by_key(snapshot: list[RawTransaction], name: str):
        index: dict[tuple, RawTransaction] = {}
        for record in snapshot:
            if record.key in index:
                raise KeyConflict(f"duplicate key in {name} snapshot: {record.key}")
            index[record.key] = record
        return index

    before = by_key(previous, "previous")
    after = by_key(current, "current")

    new: list[RawTransaction] = []
    changed: list[tuple[RawTransaction, RawTransaction]] = []
    for key, record in after.items():
        if key not in before:
            new.append(record)
        elif record != before[key]:
            changed.append((before[key], record))
    return DeltaSet(new=new, changed=changed)
