"""Star-schema cube: three dimension tables around one additive key figure.

Characteristics carry the warehouse-style technical names used in result
layouts (0CREDITOR, 0GL_ACCOUNT, ZAMOUNT1, ...) plus a descriptive alias.
Surrogate keys are assigned in first-seen order, so identical input always
produces a byte-identical serialized cube.  Amounts aggregate exactly in
fixed point; means round half-up to 2 decimals.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import QueryError
from .ingest import RawTransaction
from .schema import format_date, round_money
from .tables import CHAR, NUM, Column, Table

KEY_FIGURE = "ZAMOUNT1"

# chart of accounts is not in the source extract; derived per company code
DEFAULT_CHART_OF_ACCOUNTS = {"*": "CAIN"}


@dataclass(frozen=True)
class Characteristic:
    name: str          # technical name, used in result tables
    alias: str         # descriptive name, accepted on input
    dimension: int     # 1..3


CHARACTERISTICS = (
    Characteristic("ZBUSNHEAD", "business_head", 1),
    Characteristic("0AC_DOC_NO", "document_no", 1),
    Characteristic("0COMP_CODE", "company_code", 1),
    Characteristic("0GL_ACCOUNT", "gl_account", 2),
    Characteristic("0CHRT_ACCTS", "chart_of_accounts", 2),
    Characteristic("0PSTNG_DATE", "posting_date", 2),
    Characteristic("0DEBITOR", "customer", 3),
    Characteristic("0CREDITOR", "vendor", 3),
)

_BY_NAME = {c.name: c for c in CHARACTERISTICS}
_BY_ALIAS = {c.alias: c for c in CHARACTERISTICS}


def resolve_characteristic(name: str) -> Characteristic:
    char = _BY_NAME.get(name) or _BY_ALIAS.get(name)
    if char is None:
        raise QueryError(f"unknown characteristic: {name}")
    return char


@dataclass
class Dimension:
    number: int
    characteristics: list[Characteristic]
    rows: list[tuple] = field(default_factory=list)      # surrogate key = index + 1
    index: dict[tuple, int] = field(default_factory=dict)

    def key_for(self, values: tuple) -> int:
        key = self.index.get(values)
        if key is None:
            self.rows.append(values)
            key = len(self.rows)
            self.index[values] = key
        return key


@dataclass(frozen=True)
class FactRow:
    dim_keys: tuple[int, int, int]
    amount: Decimal


@dataclass(frozen=True)
class LoadStats:
    facts_added: int
    dim_rows_added: tuple[int, int, int]


@dataclass(frozen=True)
class QuerySpec:
    group_by: list[str]
    filters: list[tuple[str, object]] = field(default_factory=list)
    # filter value: set/list of accepted values, or ("range", lo, hi) for dates
    aggregate: str = "sum"     # sum | count | mean


class Cube:
    """Immutable after load; queries are read-only."""

    def __init__(self, chart_of_accounts: dict[str, str] | None = None):
        self.chart_of_accounts = dict(chart_of_accounts
                                      or DEFAULT_CHART_OF_ACCOUNTS)
        self.dimensions = [
            Dimension(i, [c for c in CHARACTERISTICS if c.dimension == i])
            for i in (1, 2, 3)
        ]
        self.facts: list[FactRow] = []

    # --- loading ------------------------------------------------------------

    def _chart_for(self, company_code: str) -> str:
        return self.chart_of_accounts.get(
            company_code, self.chart_of_accounts.get("*", "CAIN"))

    def _characteristic_value(self, record: RawTransaction, char: Characteristic) -> str:
        if char.name == "0CHRT_ACCTS":
            return self._chart_for(record.company_code)
        value = getattr(record, char.alias)
        if isinstance(value, datetime.date):
            return format_date(value)
        return str(value) if value else "#"

    def load(self, records: list[RawTransaction]) -> LoadStats:
        """One fact per record; dimension rows deduplicated."""
        dims_before = tuple(len(d.rows) for d in self.dimensions)
        for record in records:
            keys = []
            for dim in self.dimensions:
                values = tuple(self._characteristic_value(record, c)
                               for c in dim.characteristics)
                keys.append(dim.key_for(values))
            self.facts.append(FactRow(tuple(keys), record.amount_lc))
        dims_after = tuple(len(d.rows) for d in self.dimensions)
        return LoadStats(
            facts_added=len(records),
            dim_rows_added=tuple(a - b for a, b in zip(dims_after, dims_before)),
        )

    # --- reading ------------------------------------------------------------

    def _fact_value(self, fact: FactRow, char: Characteristic) -> str:
        dim = self.dimensions[char.dimension - 1]
        values = dim.rows[fact.dim_keys[char.dimension - 1] - 1]
        return values[dim.characteristics.index(char)]

    def query(self, spec: QuerySpec) -> Table:
        """Grouped aggregation; rows sorted lexicographically by group values."""
        group_chars = [resolve_characteristic(n) for n in spec.group_by]
        filters = []
        for name, accept in spec.filters:
            char = resolve_characteristic(name)
            if isinstance(accept, tuple) and accept and accept[0] == "range":
                _, lo, hi = accept
                filters.append((char, lambda v, lo=lo, hi=hi: lo <= v <= hi))
            else:
                allowed = set(accept)
                filters.append((char, lambda v, allowed=allowed: v in allowed))
        if spec.aggregate not in ("sum", "count", "mean"):
            raise QueryError(f"unknown aggregate: {spec.aggregate}")

        groups: dict[tuple, list[Decimal]] = {}
        for fact in self.facts:
            if any(not ok(self._fact_value(fact, char)) for char, ok in filters):
                continue
            key = tuple(self._fact_value(fact, c) for c in group_chars)
            groups.setdefault(key, []).append(fact.amount)

        agg_column = {
            "sum": Column(f"{KEY_FIGURE}_SUM", NUM),
            "count": Column("ROW_COUNT", NUM),
            "mean": Column(f"{KEY_FIGURE}_MEAN", NUM),
        }[spec.aggregate]
        columns = [Column(c.name, CHAR) for c in group_chars] + [agg_column]

        rows = []
        for key in sorted(groups):
            amounts = groups[key]
            if spec.aggregate == "sum":
                value = sum(amounts, Decimal("0.00"))
            elif spec.aggregate == "count":
                value = len(amounts)
            else:
                value = round_money(sum(amounts, Decimal(0)) / len(amounts))
            rows.append(key + (value,))
        return Table(columns, rows)

    def extract_dataset(self, attributes: list[str],
                        key_figure: str = KEY_FIGURE) -> Table:
        """Flat analysis table: one row per fact, characteristics resolved.

        This is the mining input surface.
        """
        if key_figure != KEY_FIGURE:
            raise QueryError(f"unknown key figure: {key_figure}")
        chars = [resolve_characteristic(n) for n in attributes]
        columns = [Column(c.name, CHAR) for c in chars] + [Column(KEY_FIGURE, NUM)]
        rows = [tuple(self._fact_value(f, c) for c in chars) + (f.amount,)
                for f in self.facts]
        return Table(columns, rows)

    def grand_total(self) -> Decimal:
        return sum((f.amount for f in self.facts), Decimal("0.00"))
