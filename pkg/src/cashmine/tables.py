"""Lightweight column-typed tables passed between pipeline stages.

A table is an ordered list of (name, kind) columns plus tuple rows.  Kinds:

* ``char`` -- categorical string values
* ``num``  -- numeric values (int, float or Decimal for money)
* ``prob`` -- probabilities, printed with at most 5 decimal places

Cube extracts, process transforms, mining inputs and deployment results all
share this shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import QueryError

CHAR = "char"
NUM = "num"
PROB = "prob"


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = CHAR


@dataclass
class Table:
    columns: list[Column]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(names) != len(set(names)):
            raise QueryError(f"duplicate column names: {names}")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise QueryError(f"unknown column: {name}")

    def column(self, name: str) -> Column:
        return self.columns[self.index_of(name)]

    def values(self, name: str) -> list:
        i = self.index_of(name)
        return [row[i] for row in self.rows]

    def select(self, names: list[str]) -> "Table":
        """Project onto ``names`` in the given order."""
        idx = [self.index_of(n) for n in names]
        cols = [self.columns[i] for i in idx]
        return Table(cols, [tuple(row[i] for i in idx) for row in self.rows])

    def with_column(self, column: Column, values: list) -> "Table":
        if len(values) != len(self.rows):
            raise QueryError(
                f"column {column.name}: {len(values)} values for "
                f"{len(self.rows)} rows")
        rows = [row + (v,) for row, v in zip(self.rows, values)]
        return Table(self.columns + [column], rows)

    def record(self, i: int) -> dict:
        """Row ``i`` as a name -> value mapping."""
        return dict(zip(self.column_names, self.rows[i]))

    def __len__(self) -> int:
        return len(self.rows)
