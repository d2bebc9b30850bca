"""Deployment surfaces: result flat files, charts, and a report feed.

Result files are delimiter-separated UTF-8 with one header row.  Model
output columns carry a fixed prefix per model kind plus a zero-padded
3-digit index (DT_PRED_VAL002 and friends).  Probabilities print with at
most 5 decimal places and no trailing zeros; money prints in plain decimal.
All writers are byte-stable for identical input.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import RenderError
from .schema import format_money
from .tables import CHAR, NUM, PROB, Column, Table

# model kind -> result column prefixes (suffix is the model index, 3 digits)
TREE_COLUMNS = ("DT_PRED_NODE", "DT_PRED_PROB", "DT_PRED_VAL")
CLUSTER_COLUMN = "CL_PRED_CLUSTER"
REGRESSION_COLUMN = "SC_SCORE"

CHART_KINDS = (
    "overall-influence",
    "attribute-distribution",
    "inter-cluster-distance",
    "intra-cluster-distance",
    "regression-scoring",
)

_BAR_WIDTH = 40


def format_prob(p: float) -> str:
    """At most 5 decimals, trailing zeros dropped: 11/14 -> 0.78571, 1.0 -> 1."""
    text = f"{float(p):.5f}".rstrip("0").rstrip(".")
    return text if text else "0"


def format_number(v) -> str:
    """Plain decimal rendering, never scientific notation."""
    if isinstance(v, Decimal):
        return format_money(v)
    if isinstance(v, int):
        return str(v)
    f = float(v)
    if f == int(f) and abs(f) < 1e16:
        return str(int(f))
    text = repr(f)
    if "e" in text or "E" in text:
        text = f"{f:.10f}".rstrip("0").rstrip(".")
    return text


def format_cell(value, kind: str) -> str:
    if value is None:
        return ""
    if kind == PROB:
        return format_prob(value)
    if kind == NUM:
        return format_number(value)
    return str(value)


def write_flat_file(table: Table, destination: str | Path,
                    delimiter: str = ",") -> Path:
    destination = Path(destination)
    with destination.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(table.column_names)
        kinds = [c.kind for c in table.columns]
        for row in table.rows:
            writer.writerow([format_cell(v, k) for v, k in zip(row, kinds)])
    return destination


def read_flat_file(path: str | Path, delimiter: str = ",") -> Table:
    """Read a result file back; all columns come back as char."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise RenderError(f"empty result file: {path}") from None
        rows = [tuple(row) for row in reader]
    return Table([Column(name, CHAR) for name in header], rows)


@dataclass(frozen=True)
class ChartSpec:
    kind: str
    title: str
    payload: tuple        # (label, value) pairs, or row tuples for matrices

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise RenderError(f"unknown chart kind: {self.kind}")
        if not self.payload:
            raise RenderError(f"chart {self.title!r} has an empty payload")
        if self.kind == "inter-cluster-distance":
            k = len(self.payload)
            if any(len(row) != k for row in self.payload):
                raise RenderError(f"chart {self.title!r}: matrix must be square")


def _bar_text(title: str, pairs) -> str:
    label_w = max(len(str(label)) for label, _ in pairs)
    top = max(float(v) for _, v in pairs)
    lines = [title, "=" * len(title)]
    for label, value in pairs:
        n = int(round(_BAR_WIDTH * float(value) / top)) if top > 0 else 0
        lines.append(f"{str(label):<{label_w}}  {'#' * n:<{_BAR_WIDTH}} "
                     f"{format_number(float(value))}")
    return "\n".join(lines) + "\n"


def _matrix_text(title: str, matrix) -> str:
    k = len(matrix)
    cells = [[format_number(float(v)) for v in row] for row in matrix]
    labels = [f"C{i}" for i in range(k)]
    width = max(len(c) for row in cells for c in row)
    width = max(width, max(len(l) for l in labels))
    lines = [title, "=" * len(title)]
    lines.append(" " * width + "  " + "  ".join(f"{l:>{width}}" for l in labels))
    for label, row in zip(labels, cells):
        lines.append(f"{label:>{width}}  " + "  ".join(f"{c:>{width}}" for c in row))
    return "\n".join(lines) + "\n"


def _bar_svg(title: str, pairs) -> str:
    top = max(float(v) for _, v in pairs)
    bar_px, row_h, left, top_pad = 400, 22, 180, 40
    height = top_pad + row_h * len(pairs) + 10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="640" height="{height}">',
        f'<text x="10" y="20" font-family="monospace" font-size="14">'
        f"{escape(title)}</text>",
    ]
    for i, (label, value) in enumerate(pairs):
        y = top_pad + i * row_h
        w = int(round(bar_px * float(value) / top)) if top > 0 else 0
        parts.append(f'<text x="10" y="{y + 14}" font-family="monospace" '
                     f'font-size="12">{escape(str(label))}</text>')
        parts.append(f'<rect x="{left}" y="{y + 3}" width="{w}" height="14" '
                     f'fill="#4a7ebb"/>')
        parts.append(f'<text x="{left + w + 6}" y="{y + 14}" '
                     f'font-family="monospace" font-size="12">'
                     f"{escape(format_number(float(value)))}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _matrix_svg(title: str, matrix) -> str:
    k = len(matrix)
    top = max(float(v) for row in matrix for v in row)
    cell, left, top_pad = 64, 60, 60
    size_w = left + k * cell + 20
    size_h = top_pad + k * cell + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size_w}" height="{size_h}">',
        f'<text x="10" y="20" font-family="monospace" font-size="14">'
        f"{escape(title)}</text>",
    ]
    for j in range(k):
        parts.append(f'<text x="{left + j * cell + 20}" y="{top_pad - 10}" '
                     f'font-family="monospace" font-size="12">C{j}</text>')
    for i in range(k):
        parts.append(f'<text x="10" y="{top_pad + i * cell + 36}" '
                     f'font-family="monospace" font-size="12">C{i}</text>')
        for j in range(k):
            v = float(matrix[i][j])
            shade = 255 - int(round(160 * v / top)) if top > 0 else 255
            color = f"#{shade:02x}{shade:02x}ff"
            x, y = left + j * cell, top_pad + i * cell
            parts.append(f'<rect x="{x}" y="{y}" width="{cell - 2}" '
                         f'height="{cell - 2}" fill="{color}"/>')
            parts.append(f'<text x="{x + 4}" y="{y + 36}" '
                         f'font-family="monospace" font-size="11">'
                         f"{escape(format_number(v))}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_chart(spec: ChartSpec, destination: str | Path) -> tuple[Path, Path]:
    """Write ``destination``.svg plus a ``.txt`` fallback of the same numbers."""
    base = Path(destination)
    if spec.kind == "inter-cluster-distance":
        text = _matrix_text(spec.title, spec.payload)
        svg = _matrix_svg(spec.title, spec.payload)
    else:
        text = _bar_text(spec.title, spec.payload)
        svg = _bar_svg(spec.title, spec.payload)
    svg_path = base.with_suffix(".svg")
    txt_path = base.with_suffix(".txt")
    svg_path.write_text(svg, encoding="utf-8")
    txt_path.write_text(text, encoding="utf-8")
    return svg_path, txt_path


def report_feed(table: Table) -> list[dict[str, str]]:
    """One record per row, field order preserved, values in canonical text."""
    kinds = [c.kind for c in table.columns]
    names = table.column_names
    return [
        {name: format_cell(v, k) for name, v, k in zip(names, row, kinds)}
        for row in table.rows
    ]


def write_report_feed(table: Table, destination: str | Path) -> Path:
    destination = Path(destination)
    with destination.open("w", encoding="utf-8", newline="") as fh:
        for record in report_feed(table):
            fh.write(json.dumps(record, ensure_ascii=False,
                                separators=(", ", ": ")))
            fh.write("\n")
    return destination


def render_table_text(table: Table) -> str:
    """Aligned fixed-width rendering for terminal output."""
    kinds = [c.kind for c in table.columns]
    header = table.column_names
    body = [[format_cell(v, k) for v, k in zip(row, kinds)] for row in table.rows]
    widths = [len(h) for h in header]
    for row in body:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    out = io.StringIO()
    out.write("  ".join(f"{h:<{w}}" for h, w in zip(header, widths)).rstrip() + "\n")
    out.write("  ".join("-" * w for w in widths) + "\n")
    for row in body:
        out.write("  ".join(f"{c:<{w}}" for c, w in zip(row, widths)).rstrip() + "\n")
    return out.getvalue()


def render_table_delimited(table: Table, delimiter: str = ",") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(table.column_names)
    kinds = [c.kind for c in table.columns]
    for row in table.rows:
        writer.writerow([format_cell(v, k) for v, k in zip(row, kinds)])
    return buf.getvalue()
