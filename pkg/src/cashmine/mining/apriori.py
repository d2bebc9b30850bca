"""Association-rule mining (Apriori).

Rows become transactions of "column=value" items.  Frequent itemsets are
found levelwise with anti-monotone pruning; rules enumerate every
antecedent/consequent partition of each frequent set of size >= 2.
Support is a fraction of the row count.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from ..errors import FitError
from ..tables import Table


@dataclass(frozen=True)
class ItemSet:
    items: tuple[str, ...]          # sorted
    support: float
    count: int


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[str, ...]
    consequent: tuple[str, ...]
    support: float
    confidence: float


@dataclass(frozen=True)
class AprioriModel:
    itemsets: tuple[ItemSet, ...]
    rules: tuple[Rule, ...]
    min_support: float
    min_confidence: float
    n_rows: int


def _transactions(table: Table, columns: list[str] | None) -> list[frozenset]:
    names = columns if columns is not None else [c.name for c in table.columns]
    rows = []
    for i in range(len(table.rows)):
        record = table.record(i)
        rows.append(frozenset(f"{name}={record[name]}" for name in names))
    return rows


def apriori_fit(table: Table, min_support: float = 0.1,
                min_confidence: float = 0.5,
                columns: list[str] | None = None) -> AprioriModel:
    if not 0.0 < min_support <= 1.0:
        raise FitError(f"min_support out of range: {min_support}")
    if not 0.0 < min_confidence <= 1.0:
        raise FitError(f"min_confidence out of range: {min_confidence}")
    if not table.rows:
        raise FitError("cannot mine an empty table")

    transactions = _transactions(table, columns)
    n = len(transactions)

    def count(itemset: frozenset) -> int:
        return sum(1 for t in transactions if itemset <= t)

    support_of: dict[frozenset, int] = {}
    singletons = sorted({item for t in transactions for item in t})
    level = []
    for item in singletons:
        c = count(frozenset([item]))
        if c / n >= min_support:
            fs = frozenset([item])
            support_of[fs] = c
            level.append(fs)

    frequent: list[frozenset] = list(level)
    while level:
        # join step: union pairs that agree on all but one item
        seen = set()
        next_level = []
        for a, b in combinations(level, 2):
            candidate = a | b
            if len(candidate) != len(a) + 1 or candidate in seen:
                continue
            seen.add(candidate)
            # prune: every subset one smaller must itself be frequent
            if any(candidate - {item} not in support_of for item in candidate):
                continue
            c = count(candidate)
            if c / n >= min_support:
                support_of[candidate] = c
                next_level.append(candidate)
        frequent.extend(next_level)
        level = next_level

    itemsets = tuple(sorted(
        (ItemSet(tuple(sorted(fs)), support_of[fs] / n, support_of[fs])
         for fs in frequent),
        key=lambda s: (len(s.items), s.items)))

    rules = []
    for itemset in itemsets:
        if len(itemset.items) < 2:
            continue
        members = set(itemset.items)
        for r in range(1, len(itemset.items)):
            for antecedent in combinations(itemset.items, r):
                base = support_of[frozenset(antecedent)]
                confidence = itemset.count / base
                if confidence >= min_confidence:
                    consequent = tuple(sorted(members - set(antecedent)))
                    rules.append(Rule(antecedent, consequent,
                                      itemset.support, confidence))
    rules.sort(key=lambda r: (-r.confidence, -r.support, r.antecedent, r.consequent))
    return AprioriModel(itemsets, tuple(rules), min_support, min_confidence, n)
