"""Deterministic synthetic cash-flow data with planted structure.

Every vendor books to one G/L account through a rule table; a flip
probability replaces the ruled account with a random other one, so the
recoverable signal strength is configurable.  Amounts are log-uniform,
dates uniform over a window.  Output is the standard source flat-file
format and parses cleanly back through ingest.
"""

from __future__ import annotations

import datetime
import math
import random
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import GenError
from .ingest import RawTransaction, serialize_transactions
from .schema import round_money

DEFAULT_AMOUNT_RANGE = (Decimal("200"), Decimal("3000000"))
DEFAULT_DATE_RANGE = (datetime.date(2012, 8, 1), datetime.date(2012, 9, 30))


@dataclass(frozen=True)
class GenSpec:
    seed: int = 12345
    n_records: int = 1000
    n_vendors: int = 20
    n_gl_accounts: int = 8
    flip_probability: float = 0.0
    amount_range: tuple[Decimal, Decimal] = DEFAULT_AMOUNT_RANGE
    date_range: tuple[datetime.date, datetime.date] = DEFAULT_DATE_RANGE
    company_code: str = "1000"
    currency: str = "INR"
    business_heads: tuple[str, ...] = ("OPER",)
    rule: dict[str, str] | None = field(default=None, hash=False)

    def __post_init__(self):
        if self.n_records < 1:
            raise GenError(f"n_records must be >= 1: {self.n_records}")
        if self.n_vendors < 1 or self.n_gl_accounts < 1:
            raise GenError("need at least one vendor and one G/L account")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise GenError(
                f"flip_probability out of range: {self.flip_probability}")
        lo, hi = self.amount_range
        if not 0 < lo <= hi:
            raise GenError(f"bad amount range: {lo}..{hi}")
        if self.date_range[0] > self.date_range[1]:
            raise GenError(f"bad date range: {self.date_range}")


def gl_pool(spec: GenSpec) -> list[str]:
    return [str(250000 + 10 * i) for i in range(spec.n_gl_accounts)]


def vendor_rule(spec: GenSpec) -> dict[str, str]:
    """The planted vendor -> G/L mapping (derived unless supplied)."""
    pool = gl_pool(spec)
    if spec.rule is not None:
        extra = set(spec.rule.values()) - set(pool)
        if extra:
            raise GenError("rule targets outside the G/L pool: "
                           + ", ".join(sorted(extra)))
        return dict(spec.rule)
    vendors = [str(200001 + i) for i in range(spec.n_vendors)]
    return {v: pool[i % len(pool)] for i, v in enumerate(vendors)}


def generate_records(spec: GenSpec) -> list[RawTransaction]:
    rule = vendor_rule(spec)
    vendors = sorted(rule)
    pool = gl_pool(spec)
    rng = random.Random(spec.seed)
    lo, hi = float(spec.amount_range[0]), float(spec.amount_range[1])
    log_lo, log_hi = math.log(lo), math.log(hi)
    start, end = spec.date_range
    n_days = (end - start).days

    records = []
    for i in range(spec.n_records):
        vendor = rng.choice(vendors)
        account = rule[vendor]
        if spec.flip_probability > 0 and rng.random() < spec.flip_probability:
            others = [g for g in pool if g != account]
            if others:
                account = rng.choice(others)
        posting = start + datetime.timedelta(days=rng.randrange(n_days + 1))
        amount = round_money(Decimal(repr(math.exp(rng.uniform(log_lo, log_hi)))))
        records.append(RawTransaction(
            company_code=spec.company_code,
            gl_account=account,
            posting_date=posting,
            business_head=rng.choice(spec.business_heads),
            amount_lc=amount,
            document_no=f"{1226000001 + i}",
            fiscal_year=posting.year,
            vendor=vendor,
            customer=None,
            currency=spec.currency,
        ))
    return records


def generate(spec: GenSpec) -> str:
    """Flat-file text in the source format; identical for identical specs."""
    return serialize_transactions(generate_records(spec))


_SPEC_KEYS = ("seed", "records", "vendors", "gls", "flip", "amounts", "dates",
              "company", "currency", "heads")


def parse_genspec(text: str) -> GenSpec:
    """Key = value lines; unknown keys are an error.

    ``amounts`` and ``dates`` are ``lo..hi`` ranges, ``heads`` a comma list.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise GenError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SPEC_KEYS:
            raise GenError(f"line {lineno}: unknown key {key!r}")
        values[key] = value.strip()

    kwargs: dict = {}
    try:
        if "seed" in values:
            kwargs["seed"] = int(values["seed"])
        if "records" in values:
            kwargs["n_records"] = int(values["records"])
        if "vendors" in values:
            kwargs["n_vendors"] = int(values["vendors"])
        if "gls" in values:
            kwargs["n_gl_accounts"] = int(values["gls"])
        if "flip" in values:
            kwargs["flip_probability"] = float(values["flip"])
        if "amounts" in values:
            lo, _, hi = values["amounts"].partition("..")
            kwargs["amount_range"] = (Decimal(lo), Decimal(hi))
        if "dates" in values:
            lo, _, hi = values["dates"].partition("..")
            kwargs["date_range"] = (
                datetime.datetime.strptime(lo, "%Y%m%d").date(),
                datetime.datetime.strptime(hi, "%Y%m%d").date())
        if "company" in values:
            kwargs["company_code"] = values["company"]
        if "currency" in values:
            kwargs["currency"] = values["currency"]
        if "heads" in values:
            kwargs["business_heads"] = tuple(
                h.strip() for h in values["heads"].split(",") if h.strip())
    except (ValueError, ArithmeticError) as exc:
        raise GenError(f"bad spec value: {exc}") from exc
    return GenSpec(**kwargs)
