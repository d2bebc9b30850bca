"""Source field schema for ERP-style flat extracts.

The default schema mirrors the ten cash-flow source fields (company code,
G/L account, posting date, business head, amount, document number, fiscal
year, vendor, customer, currency) with their declared types, lengths and
default values.  Field values travel as strings in flat files; this module
owns the per-type validation and the canonical string form used when
writing them back out.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP
from enum import Enum

from .errors import SchemaError, ValidationError

TWO_PLACES = Decimal("0.01")


class FieldKind(str, Enum):
    CHAR = "Char"   # fixed-length character code
    DATS = "Dats"   # calendar date, YYYYMMDD
    CURR = "Curr"   # money, fixed point with 2 decimals
    NUMC = "Numc"   # numeric character string (digits only)
    CUKY = "Cuky"   # currency key


@dataclass(frozen=True)
class FieldDef:
    name: str
    kind: FieldKind
    length: int
    default: str | None = None   # canonical string form, None = no default
    required: bool = True        # missing + no default -> error; optional codes may stay empty

    def __post_init__(self):
        if self.length <= 0:
            raise SchemaError(f"field {self.name}: length must be > 0")


@dataclass(frozen=True)
class SourceSchema:
    fields: tuple[FieldDef, ...]

    def __post_init__(self):
        names = [f.name for f in self.fields]
        if len(names) != len(set(names)):
            raise SchemaError("duplicate field names in schema")

    @property
    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]

    def field(self, name: str) -> FieldDef:
        for f in self.fields:
            if f.name == name:
                return f
        raise SchemaError(f"unknown field: {name}")


# --- canonical value handling per field kind -------------------------------

def parse_money(text: str) -> Decimal:
    """Parse a plain-decimal amount into an exact 2-decimal value."""
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise ValidationError(f"not a decimal amount: {text!r}")
    if not value.is_finite():
        raise ValidationError(f"amount is not finite: {text!r}")
    if -value.as_tuple().exponent > 2:
        raise ValidationError(f"more than 2 decimal places: {text!r}")
    return value.quantize(TWO_PLACES)


def format_money(value: Decimal) -> str:
    """Canonical text form: plain decimal, trailing fractional zeros dropped."""
    text = format(value.quantize(TWO_PLACES), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"


def round_money(value: Decimal) -> Decimal:
    """Round to 2 decimals, half away from zero."""
    return value.quantize(TWO_PLACES, rounding=ROUND_HALF_UP)


def parse_date(text: str) -> datetime.date:
    if len(text) != 8 or not text.isdigit():
        raise ValidationError(f"invalid date (expected YYYYMMDD): {text!r}")
    try:
        return datetime.date(int(text[:4]), int(text[4:6]), int(text[6:8]))
    except ValueError:
        raise ValidationError(f"invalid date: {text!r}")


def format_date(value: datetime.date) -> str:
    return f"{value.year:04d}{value.month:02d}{value.day:02d}"


def validate_field_value(field: FieldDef, text: str) -> str:
    """Validate ``text`` against the field type; return the canonical form.

    Raises ValidationError with a short reason on failure.
    """
    text = text.strip()
    if field.kind in (FieldKind.CHAR, FieldKind.CUKY):
        if len(text) > field.length:
            raise ValidationError(
                f"exceeds declared length {field.length}: {text!r}")
        return text
    if field.kind == FieldKind.DATS:
        return format_date(parse_date(text))
    if field.kind == FieldKind.NUMC:
        if not text.isdigit():
            raise ValidationError(f"not numeric: {text!r}")
        if len(text) > field.length:
            raise ValidationError(
                f"exceeds declared length {field.length}: {text!r}")
        return text
    if field.kind == FieldKind.CURR:
        value = parse_money(text)
        digits = len(value.as_tuple().digits)
        if digits > field.length:
            raise ValidationError(f"exceeds {field.length} digits: {text!r}")
        return format_money(value)
    raise ValidationError(f"unsupported field kind: {field.kind}")


# --- the default cash-flow source schema -----------------------------------

CASHFLOW_SCHEMA = SourceSchema(fields=(
    FieldDef("BUKRS", FieldKind.CHAR, 4, default="1000"),
    FieldDef("SAKNR", FieldKind.CHAR, 10),
    FieldDef("BUDAT", FieldKind.DATS, 8),
    FieldDef("BIZ_HEAD", FieldKind.CHAR, 10, default="OPER"),
    FieldDef("WRBTR", FieldKind.CURR, 13),
    FieldDef("BELNR", FieldKind.CHAR, 10),
    FieldDef("GJAHR", FieldKind.NUMC, 4, default="2012"),
    FieldDef("LIFNR", FieldKind.CHAR, 10, required=False),
    FieldDef("KUNNR", FieldKind.CHAR, 10, required=False),
    FieldDef("WAERS", FieldKind.CUKY, 5, default="INR"),
))
