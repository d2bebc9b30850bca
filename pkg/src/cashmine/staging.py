"""Staging layer: append-only PSA requests and the activated DSO.

The PSA keeps every loaded request at source granularity.  Rows carry a
status (ok / edited / error) and can be repaired in place without changing
the row count.  Activation moves a request into the DSO with
overwrite-by-key semantics, versioning each key and appending before/after
images to a change log so the active table can be replayed from empty.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from statistics import median

from .errors import ActivationRefused, DefaultError, NotFound, ValidationError
from .ingest import ParseError, RawTransaction, apply_defaults
from .schema import CASHFLOW_SCHEMA, SourceSchema, validate_field_value

OK = "ok"
EDITED = "edited"
ERROR = "error"


@dataclass
class PsaRow:
    """One staged row: canonical field strings plus repair bookkeeping."""

    values: dict[str, str]
    status: str = OK
    error: str | None = None
    original: dict[str, str] = field(default_factory=dict)  # first value of each edited field

    def transaction(self, schema: SourceSchema = CASHFLOW_SCHEMA) -> RawTransaction:
        if self.status == ERROR:
            raise ValidationError(f"row has unresolved error: {self.error}")
        return apply_defaults(self.values, schema)


@dataclass
class PsaRequest:
    request_id: int
    rows: list[PsaRow]

    def error_rows(self) -> list[int]:
        return [i for i, row in enumerate(self.rows) if row.status == ERROR]


class PsaStore:
    """Append-only request store with in-place row repair."""

    def __init__(self, schema: SourceSchema = CASHFLOW_SCHEMA):
        self.schema = schema
        self.requests: list[PsaRequest] = []

    def append(self, records: list[RawTransaction],
               errors: list[ParseError] | None = None) -> int:
        """Stage parsed records plus any error rows as the next request.

        Error rows are interleaved back near their original row positions so
        the request preserves source order (positions may shift when
        cleansing removed duplicates upstream).
        """
        request_id = len(self.requests) + 1
        good = deque(records)
        errs = deque(sorted(errors or [], key=lambda e: e.row))
        rows: list[PsaRow] = []
        row_no = 0
        while good or errs:
            row_no += 1
            if errs and (errs[0].row <= row_no or not good):
                err = errs.popleft()
                rows.append(PsaRow(values=dict(err.values), status=ERROR,
                                   error=f"{err.field}: {err.reason}"))
            else:
                record = good.popleft()
                rows.append(PsaRow(values=record.as_field_dict(self.schema)))
        self.requests.append(PsaRequest(request_id, rows))
        return request_id

    def request(self, request_id: int) -> PsaRequest:
        if not 1 <= request_id <= len(self.requests):
            raise NotFound(f"no such request: {request_id}")
        return self.requests[request_id - 1]

    def edit(self, request_id: int, row_index: int, field_name: str,
             new_value: str) -> PsaRow:
        """Fix one field of one staged row; the original value is retained.

        The whole row is revalidated: if it now parses, status becomes
        ``edited`` and any previous error is cleared.  A type-invalid
        ``new_value`` raises ``ValidationError`` and leaves the row as is.
        """
        request = self.request(request_id)
        if not 0 <= row_index < len(request.rows):
            raise NotFound(f"request {request_id} has no row {row_index}")
        field_def = self.schema.field(field_name)
        canonical = validate_field_value(field_def, new_value)

        row = request.rows[row_index]
        candidate = dict(row.values)
        candidate[field_name] = canonical
        try:
            apply_defaults(candidate, self.schema)
            error = None
        except (ValidationError, DefaultError) as exc:
            error = str(exc)

        if field_name not in row.original:
            row.original[field_name] = row.values.get(field_name, "")
        row.values = candidate
        row.status = ERROR if error else EDITED
        row.error = error
        return row


# --- cleansing --------------------------------------------------------------

@dataclass(frozen=True)
class CleansePolicy:
    sentinel: str = "#"       # fill for missing optional vendor/customer codes
    outlier_k: float = 6.0    # |x - median| > k * MAD, per G/L account group


@dataclass
class CleanseReport:
    duplicates_removed: int = 0
    missing_filled: int = 0
    outliers_flagged: list[tuple[tuple, str, str]] = field(default_factory=list)


def cleanse(records: list[RawTransaction],
            policy: CleansePolicy = CleansePolicy(),
            ) -> tuple[list[RawTransaction], CleanseReport]:
    """Deduplicate, fill missing optional codes, flag amount outliers.

    Exact duplicates (all fields equal) collapse to the first occurrence.
    Missing vendor/customer codes take the sentinel so dimension lookups
    never fail.  Amounts beyond the robust bound are flagged per G/L account
    group but kept -- the cube must still balance.  Total and idempotent.
    """
    report = CleanseReport()

    seen: set[RawTransaction] = set()
    deduped: list[RawTransaction] = []
    for record in records:
        if record in seen:
            report.duplicates_removed += 1
            continue
        seen.add(record)
        deduped.append(record)

    filled: list[RawTransaction] = []
    for record in deduped:
        updates = {}
        if not record.vendor:
            updates["vendor"] = policy.sentinel
            report.missing_filled += 1
        if not record.customer:
            updates["customer"] = policy.sentinel
            report.missing_filled += 1
        filled.append(replace(record, **updates) if updates else record)

    by_account: dict[str, list[RawTransaction]] = {}
    for record in filled:
        by_account.setdefault(record.gl_account, []).append(record)
    for account, group in by_account.items():
        amounts = [float(r.amount_lc) for r in group]
        center = median(amounts)
        mad = median(abs(x - center) for x in amounts)
        for record, x in zip(group, amounts):
            if abs(x - center) > policy.outlier_k * mad:
                report.outliers_flagged.append(
                    (record.key, "WRBTR", record.field_value("WRBTR")))
    return filled, report


# --- DSO --------------------------------------------------------------------

INSERT = "insert"
OVERWRITE = "overwrite"


@dataclass(frozen=True)
class ChangeLogEntry:
    key: tuple[str, str, int]
    action: str                       # insert | overwrite
    before: RawTransaction | None     # None iff insert
    after: RawTransaction
    request_id: int


@dataclass(frozen=True)
class DsoRecord:
    record: RawTransaction
    version: int

    @property
    def key(self) -> tuple[str, str, int]:
        return self.record.key


class DsoStore:
    """Activated store: one current record per document key."""

    def __init__(self):
        self.active: dict[tuple, DsoRecord] = {}
        self.change_log: list[ChangeLogEntry] = []

    def activate(self, request: PsaRequest,
                 schema: SourceSchema = CASHFLOW_SCHEMA) -> list[ChangeLogEntry]:
        """Apply a staged request in row order, last row per key wins.

        Requests with unresolved error rows are refused outright.
        """
        bad = request.error_rows()
        if bad:
            raise ActivationRefused(bad)
        entries: list[ChangeLogEntry] = []
        for row in request.rows:
            record = row.transaction(schema)
            key = record.key
            existing = self.active.get(key)
            if existing is None:
                entry = ChangeLogEntry(key, INSERT, None, record,
                                       request.request_id)
                self.active[key] = DsoRecord(record, version=1)
            else:
                entry = ChangeLogEntry(key, OVERWRITE, existing.record, record,
                                       request.request_id)
                self.active[key] = DsoRecord(record, existing.version + 1)
            entries.append(entry)
            self.change_log.append(entry)
        return entries

    def records(self) -> list[RawTransaction]:
        """Active records in activation (insertion) order."""
        return [rec.record for rec in self.active.values()]


def replay_change_log(entries: list[ChangeLogEntry]) -> dict[tuple, DsoRecord]:
    """Rebuild the active table from a change log alone."""
    active: dict[tuple, DsoRecord] = {}
    for entry in entries:
        if entry.action == INSERT:
            active[entry.key] = DsoRecord(entry.after, version=1)
        else:
            active[entry.key] = DsoRecord(entry.after,
                                          active[entry.key].version + 1)
    return active
