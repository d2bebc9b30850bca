"""Analysis processes: a validated DAG of source, transform, model and sink
nodes executed in deterministic topological order.

A process is written as structured text (see docs/formats.md):

    process <name>
    node <id> <kind>.<op>
      <param> = <value>
    edge <from>[:<out-port>] -> <to>[:<in-port>]

Sources pull from the cube, the active store or flat files; transforms
select, filter, bin, merge and split tables; model nodes train and apply
mining models; sinks write result files, charts and report feeds.  Node
randomness derives from sha256(run seed, node id) so adding a node never
perturbs its neighbours, and two runs with the same inputs and seed produce
byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .cube import KEY_FIGURE, Cube, QuerySpec, resolve_characteristic
from .deploy import (
    CLUSTER_COLUMN,
    REGRESSION_COLUMN,
    TREE_COLUMNS,
    ChartSpec,
    format_number,
    render_chart,
    write_flat_file,
    write_report_feed,
)
from .errors import (
    CashmineError,
    NotFound,
    QueryError,
    RunError,
    TransformError,
    ValidationError,
)
from .evaluate import SplitSpec, distance_report, influence_chart, train_test_split
from .mining import (
    ClusterModel,
    RegressionModel,
    TreeModel,
    TreeParams,
    agglomerative_fit,
    cluster_assign,
    dbscan_fit,
    dendrogram_cut,
    kmeans_fit,
    load_model,
    regression_fit,
    regression_score,
    save_model,
    tree_fit,
    tree_predict,
)
from .mining.features import DEFAULT_BINS, fit_binning, space_from_table
from .schema import CASHFLOW_SCHEMA
from .tables import CHAR, NUM, PROB, Column, Table

NODE_OPS = {
    "source": ("cube_extract", "cube_query", "dso", "file"),
    "transform": ("select", "filter", "bin", "merge", "split"),
    "model": ("train", "apply"),
    "sink": ("file", "chart", "report"),
}

TRAIN_ALGORITHMS = ("tree", "kmeans", "agglomerative", "dbscan", "regression")

# chart kinds that consume a fitted model next to the data table
MODEL_CHARTS = ("overall-influence", "inter-cluster-distance",
                "intra-cluster-distance")


@dataclass(frozen=True)
class Node:
    node_id: str
    kind: str
    op: str
    params: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    src: str
    src_port: str | None
    dst: str
    dst_port: str | None


@dataclass
class AnalysisProcess:
    name: str
    nodes: list[Node]
    edges: list[Edge]

    def node_map(self) -> dict[str, Node]:
        return {n.node_id: n for n in self.nodes}


# --- parsing ------------------------------------------------------------

_NODE_RE = re.compile(r"^node\s+([\w-]+)\s+(\w+)\.(\w+)\s*$")
_EDGE_RE = re.compile(r"^edge\s+([\w-]+)(?::(\w+))?\s*->\s*([\w-]+)(?::(\w+))?\s*$")
_PROC_RE = re.compile(r"^process\s+([\w-]+)\s*$")


def parse_process(text: str) -> AnalysisProcess:
    """Parse the structured-text process format; syntax errors raise."""
    name = None
    nodes: list[Node] = []
    edges: list[Edge] = []
    current: Node | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if raw[0] in " \t":
            # indented line: a param of the node being defined
            if current is None:
                raise ValidationError(f"line {lineno}: parameter outside a node")
            if "=" not in stripped:
                raise ValidationError(f"line {lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if not key:
                raise ValidationError(f"line {lineno}: empty parameter name")
            if key in current.params:
                raise ValidationError(f"line {lineno}: duplicate parameter {key}")
            current.params[key] = value
            continue
        if m := _PROC_RE.match(stripped):
            if name is not None:
                raise ValidationError(f"line {lineno}: duplicate process header")
            name = m.group(1)
            current = None
        elif m := _NODE_RE.match(stripped):
            current = Node(m.group(1), m.group(2), m.group(3), {})
            nodes.append(current)
        elif m := _EDGE_RE.match(stripped):
            edges.append(Edge(m.group(1), m.group(2), m.group(3), m.group(4)))
            current = None
        else:
            raise ValidationError(f"line {lineno}: cannot parse: {stripped!r}")
    if name is None:
        raise ValidationError("missing 'process <name>' header")
    if not nodes:
        raise ValidationError(f"process {name} defines no nodes")
    return AnalysisProcess(name, nodes, edges)


# --- shared helpers ------------------------------------------------------


def node_seed(run_seed: int, node_id: str) -> int:
    digest = hashlib.sha256(f"{run_seed}:{node_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _split_list(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _parse_where(value: str) -> list[tuple[str, str, tuple]]:
    """Filter clauses: ``NAME in a,b`` | ``NAME = v`` | ``NAME between lo hi``."""
    clauses = []
    for chunk in value.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        tokens = chunk.split(None, 2)
        if len(tokens) < 3:
            raise TransformError(f"cannot parse filter clause: {chunk!r}")
        name, op, rest = tokens
        if op == "in":
            values = tuple(_split_list(rest))
            if not values:
                raise TransformError(f"empty value list in clause: {chunk!r}")
            clauses.append((name, "in", values))
        elif op == "=":
            clauses.append((name, "in", (rest.strip(),)))
        elif op == "between":
            bounds = rest.split()
            if len(bounds) != 2:
                raise TransformError(f"'between' needs two bounds: {chunk!r}")
            clauses.append((name, "between", (bounds[0], bounds[1])))
        else:
            raise TransformError(f"unknown filter operator {op!r} in: {chunk!r}")
    if not clauses:
        raise TransformError("filter has no clauses")
    return clauses


def _resolve_in_port(edge: Edge, nodes: dict[str, Node]) -> str | None:
    """Default the destination port where it is unambiguous."""
    if edge.dst_port is not None:
        return edge.dst_port
    dst = nodes.get(edge.dst)
    src = nodes.get(edge.src)
    if dst is None or src is None:
        return None
    if (dst.kind, dst.op) == ("model", "apply") or (
            dst.kind == "sink" and dst.op == "chart"
            and dst.params.get("kind") in MODEL_CHARTS):
        return "model" if (src.kind, src.op) == ("model", "train") else "data"
    return None


def model_depths(process: AnalysisProcess) -> dict[str, int]:
    """Per node: max count of model nodes on any dependency path (incl. self)."""
    order = _topo_order(process)
    preds: dict[str, list[str]] = {n.node_id: [] for n in process.nodes}
    for edge in process.edges:
        if edge.src in preds and edge.dst in preds:
            preds[edge.dst].append(edge.src)
    nodes = process.node_map()
    depth: dict[str, int] = {}
    for node_id in order:
        own = 1 if nodes[node_id].kind == "model" else 0
        depth[node_id] = own + max((depth[p] for p in preds[node_id]), default=0)
    return depth


def _topo_order(process: AnalysisProcess) -> list[str]:
    """Kahn's algorithm, ready set ordered by node id; cycles leave a rest."""
    ids = [n.node_id for n in process.nodes]
    known = set(ids)
    indegree = {i: 0 for i in ids}
    out: dict[str, list[str]] = {i: [] for i in ids}
    for edge in process.edges:
        if edge.src in known and edge.dst in known:
            indegree[edge.dst] += 1
            out[edge.src].append(edge.dst)
    ready = sorted(i for i in ids if indegree[i] == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        changed = False
        for succ in out[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                ready.append(succ)
                changed = True
        if changed:
            ready.sort()
    return order


# --- validation -----------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str          # cycle | kind | port | arity | schema | param | unreachable
    where: str         # node id, edge rendering, or process name
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.where}: {self.message}"


def _edge_label(edge: Edge) -> str:
    src = edge.src if edge.src_port is None else f"{edge.src}:{edge.src_port}"
    dst = edge.dst if edge.dst_port is None else f"{edge.dst}:{edge.dst_port}"
    return f"{src} -> {dst}"


def _in_ports(node: Node) -> dict[str | None, bool]:
    """Accepted input ports -> required flag."""
    kind, op = node.kind, node.op
    if kind == "source":
        return {}
    if kind == "transform":
        if op == "merge":
            return {"left": True, "right": True}
        return {None: True}
    if kind == "model":
        if op == "train":
            return {None: True}
        return {"model": "model_path" not in node.params, "data": True}
    if op == "chart" and node.params.get("kind") in MODEL_CHARTS:
        return {"model": True, "data": True}
    return {None: True}


def _out_ports(node: Node) -> tuple[str | None, ...]:
    if (node.kind, node.op) == ("transform", "split"):
        return ("train", "test")
    if node.kind == "sink":
        return ()
    return (None,)


def _int_param(node: Node, key: str, default: int | None,
               issues: list[Issue], minimum: int = 1) -> int | None:
    raw = node.params.get(key)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        issues.append(Issue("param", node.node_id, f"{key} must be an integer: {raw!r}"))
        return default
    if value < minimum:
        issues.append(Issue("param", node.node_id, f"{key} must be >= {minimum}: {value}"))
    return value


def _float_param(node: Node, key: str, default: float | None,
                 issues: list[Issue]) -> float | None:
    raw = node.params.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        issues.append(Issue("param", node.node_id, f"{key} must be a number: {raw!r}"))
        return default


def validate_process(process: AnalysisProcess) -> list[Issue]:
    """Static checks; returns an empty list when the process is runnable."""
    issues: list[Issue] = []
    seen: set[str] = set()
    for node in process.nodes:
        if node.node_id in seen:
            issues.append(Issue("kind", node.node_id, "duplicate node id"))
        seen.add(node.node_id)
        ops = NODE_OPS.get(node.kind)
        if ops is None:
            issues.append(Issue("kind", node.node_id, f"unknown node kind: {node.kind}"))
        elif node.op not in ops:
            issues.append(Issue("kind", node.node_id,
                                f"unknown {node.kind} op: {node.op}"))
    nodes = process.node_map()

    inbound: dict[str, dict[str | None, int]] = {i: {} for i in nodes}
    for edge in process.edges:
        label = _edge_label(edge)
        if edge.src not in nodes or edge.dst not in nodes:
            issues.append(Issue("port", label, "edge endpoint is not a node"))
            continue
        if edge.src == edge.dst:
            issues.append(Issue("cycle", label, "self loop"))
            continue
        src, dst = nodes[edge.src], nodes[edge.dst]
        if edge.src_port not in _out_ports(src):
            issues.append(Issue("port", label,
                                f"node {edge.src} has no output port "
                                f"{edge.src_port or '(default)'}"))
        accepted = _in_ports(dst)
        port = _resolve_in_port(edge, nodes)
        if port not in accepted:
            issues.append(Issue("port", label,
                                f"node {edge.dst} has no input port "
                                f"{port or '(default)'}"))
            continue
        inbound[edge.dst][port] = inbound[edge.dst].get(port, 0) + 1

    for node in process.nodes:
        for port, required in _in_ports(node).items():
            n = inbound[node.node_id].get(port, 0)
            if n == 0 and required:
                issues.append(Issue("arity", node.node_id,
                                    f"missing input {port or '(default)'}"))
            if n > 1:
                issues.append(Issue("arity", node.node_id,
                                    f"input {port or '(default)'} wired {n} times"))

    order = _topo_order(process)
    if len(order) < len(nodes):
        rest = sorted(set(nodes) - set(order))
        issues.append(Issue("cycle", process.name,
                            "cycle through nodes: " + ", ".join(rest)))
        return issues   # schema propagation needs an acyclic graph

    reached = {i for i in nodes if nodes[i].kind == "source"}
    for node_id in order:
        if any(e.dst == node_id and e.src in reached for e in process.edges):
            reached.add(node_id)
    for node in process.nodes:
        if node.kind == "sink" and node.node_id not in reached:
            issues.append(Issue("unreachable", node.node_id,
                                "sink not fed by any source"))

    _check_semantics(process, order, issues)
    return issues


def _check_semantics(process: AnalysisProcess, order: list[str],
                     issues: list[Issue]) -> None:
    """Parameter checks plus schema propagation source -> sink.

    Schemas are (name, kind) tuples; ``None`` means statically unknown
    (file sources, applies of loaded models), which relaxes downstream
    column checks.
    """
    nodes = process.node_map()
    # input edge per (node, port), ports resolved
    feeds: dict[tuple[str, str | None], str] = {}
    for edge in process.edges:
        if edge.src in nodes and edge.dst in nodes:
            feeds[(edge.dst, _resolve_in_port(edge, nodes))] = edge.src

    # node id -> ("table", schema-or-None) | ("model", algorithm-or-None)
    out: dict[str, tuple[str, object]] = {}
    depths = model_depths(process)

    def table_in(node_id: str, port: str | None):
        src = feeds.get((node_id, port))
        if src is None or src not in out:
            return None
        kind, payload = out[src]
        if kind != "table":
            issues.append(Issue("schema", node_id,
                                f"input {port or '(default)'} is a model, "
                                "expected a table"))
            return None
        return payload

    def require_columns(node: Node, schema, names, what: str):
        if schema is None:
            return
        known = [c[0] for c in schema]
        for name in names:
            if name not in known:
                issues.append(Issue("schema", node.node_id,
                                    f"{what} column not in input: {name}"))

    for node_id in order:
        node = nodes[node_id]
        kind, op = node.kind, node.op
        if kind == "source":
            out[node_id] = ("table", _source_schema(node, issues))
        elif kind == "transform":
            out[node_id] = ("table", _transform_schema(node, table_in, issues,
                                                       require_columns))
        elif (kind, op) == ("model", "train"):
            algorithm = node.params.get("algorithm", "")
            if algorithm not in TRAIN_ALGORITHMS:
                issues.append(Issue("param", node_id,
                                    f"unknown algorithm: {algorithm or '(unset)'}"))
            schema = table_in(node_id, None)
            _check_train_params(node, algorithm, schema, issues, require_columns)
            out[node_id] = ("model", algorithm)
        elif (kind, op) == ("model", "apply"):
            schema = table_in(node_id, "data")
            model_src = feeds.get((node_id, "model"))
            algorithm = None
            if model_src is not None and model_src in out:
                model_kind, algorithm = out[model_src]
                if model_kind != "model":
                    issues.append(Issue("schema", node_id,
                                        "model input is not a model node"))
                    algorithm = None
            suffix = f"{depths[node_id]:03d}"
            out[node_id] = ("table", _apply_schema(schema, algorithm, suffix))
        else:
            _check_sink(node, table_in, feeds, out, issues, require_columns)
            out[node_id] = ("table", None)


def _source_schema(node: Node, issues: list[Issue]):
    op = node.op
    if op == "cube_extract":
        names = _split_list(node.params.get("attributes", ""))
        if not names:
            issues.append(Issue("param", node.node_id, "attributes is required"))
            return None
        schema = []
        for name in names:
            try:
                schema.append((resolve_characteristic(name).name, CHAR))
            except QueryError as exc:
                issues.append(Issue("schema", node.node_id, str(exc)))
        key_figure = node.params.get("key_figure", KEY_FIGURE)
        if key_figure != KEY_FIGURE:
            issues.append(Issue("param", node.node_id,
                                f"unknown key figure: {key_figure}"))
        schema.append((KEY_FIGURE, NUM))
        return tuple(schema)
    if op == "cube_query":
        names = _split_list(node.params.get("group_by", ""))
        if not names:
            issues.append(Issue("param", node.node_id, "group_by is required"))
            return None
        schema = []
        for name in names:
            try:
                schema.append((resolve_characteristic(name).name, CHAR))
            except QueryError as exc:
                issues.append(Issue("schema", node.node_id, str(exc)))
        aggregate = node.params.get("aggregate", "sum")
        agg_col = {"sum": f"{KEY_FIGURE}_SUM", "count": "ROW_COUNT",
                   "mean": f"{KEY_FIGURE}_MEAN"}.get(aggregate)
        if agg_col is None:
            issues.append(Issue("param", node.node_id,
                                f"unknown aggregate: {aggregate}"))
            return None
        if "where" in node.params:
            try:
                for name, _, _ in _parse_where(node.params["where"]):
                    resolve_characteristic(name)
            except (TransformError, QueryError) as exc:
                issues.append(Issue("param", node.node_id, str(exc)))
        return tuple(schema) + ((agg_col, NUM),)
    if op == "dso":
        return tuple((f.name, NUM if f.name == "WRBTR" else CHAR)
                     for f in CASHFLOW_SCHEMA.fields)
    # flat file: columns unknown until runtime
    if "path" not in node.params:
        issues.append(Issue("param", node.node_id, "path is required"))
    return None


def _transform_schema(node: Node, table_in, issues, require_columns):
    op = node.op
    if op == "select":
        schema = table_in(node.node_id, None)
        names = _split_list(node.params.get("columns", ""))
        if not names:
            issues.append(Issue("param", node.node_id, "columns is required"))
            return None
        require_columns(node, schema, names, "selected")
        if schema is None:
            return None
        kinds = dict(schema)
        return tuple((n, kinds[n]) for n in names if n in kinds)
    if op == "filter":
        schema = table_in(node.node_id, None)
        where = node.params.get("where")
        if not where:
            issues.append(Issue("param", node.node_id, "where is required"))
        else:
            try:
                clauses = _parse_where(where)
                require_columns(node, schema, [c[0] for c in clauses], "filter")
            except TransformError as exc:
                issues.append(Issue("param", node.node_id, str(exc)))
        return schema
    if op == "bin":
        schema = table_in(node.node_id, None)
        column = node.params.get("column")
        if not column:
            issues.append(Issue("param", node.node_id, "column is required"))
            return schema
        _int_param(node, "bins", DEFAULT_BINS, issues)
        require_columns(node, schema, [column], "binned")
        if schema is not None:
            kinds = dict(schema)
            if column in kinds and kinds[column] != NUM:
                issues.append(Issue("param", node.node_id,
                                    f"cannot bin non-numeric column: {column}"))
            return tuple(schema) + ((f"{column}_BIN", CHAR),)
        return None
    if op == "merge":
        left = table_in(node.node_id, "left")
        right = table_in(node.node_id, "right")
        keys = _split_list(node.params.get("keys", ""))
        if not keys:
            issues.append(Issue("param", node.node_id, "keys is required"))
            return None
        require_columns(node, left, keys, "join key")
        require_columns(node, right, keys, "join key")
        if left is None or right is None:
            return None
        right_rest = [c for c in right if c[0] not in keys]
        overlap = {c[0] for c in left} & {c[0] for c in right_rest}
        if overlap:
            issues.append(Issue("schema", node.node_id,
                                "duplicate columns after merge: "
                                + ", ".join(sorted(overlap))))
        return tuple(left) + tuple(right_rest)
    # split
    fraction = _float_param(node, "fraction", 0.66, issues)
    if fraction is not None and not 0.0 < fraction < 1.0:
        issues.append(Issue("param", node.node_id,
                            f"fraction out of range: {fraction}"))
    return table_in(node.node_id, None)


def _check_train_params(node: Node, algorithm: str, schema, issues,
                        require_columns) -> None:
    def require(key: str) -> str | None:
        value = node.params.get(key)
        if not value:
            issues.append(Issue("param", node.node_id,
                                f"{algorithm} needs parameter {key}"))
        return value

    if algorithm == "tree":
        target = require("target")
        named = ([target] if target else []) + _split_list(
            node.params.get("features", ""))
        require_columns(node, schema, named, "model")
        _int_param(node, "bins", DEFAULT_BINS, issues)
        _int_param(node, "min_leaf_size", 1, issues)
        _int_param(node, "max_leaves", None, issues, minimum=2)
    elif algorithm in ("kmeans", "agglomerative", "dbscan"):
        attributes = _split_list(node.params.get("attributes", ""))
        if not attributes:
            issues.append(Issue("param", node.node_id,
                                f"{algorithm} needs parameter attributes"))
        require_columns(node, schema, attributes, "model")
        _int_param(node, "bins", DEFAULT_BINS, issues)
        if algorithm in ("kmeans", "agglomerative"):
            _int_param(node, "k", None, issues)
            if "k" not in node.params:
                issues.append(Issue("param", node.node_id,
                                    f"{algorithm} needs parameter k"))
        if algorithm == "agglomerative":
            linkage = node.params.get("linkage", "single")
            if linkage not in ("single", "complete", "average"):
                issues.append(Issue("param", node.node_id,
                                    f"unknown linkage: {linkage}"))
        if algorithm == "dbscan":
            eps = _float_param(node, "eps", None, issues)
            if eps is None and "eps" not in node.params:
                issues.append(Issue("param", node.node_id,
                                    "dbscan needs parameter eps"))
            elif eps is not None and eps <= 0:
                issues.append(Issue("param", node.node_id,
                                    f"eps must be > 0: {eps}"))
            _int_param(node, "min_pts", 1, issues)
        if algorithm == "kmeans":
            _int_param(node, "restarts", 10, issues)
            _int_param(node, "max_iter", 100, issues)
    elif algorithm == "regression":
        named = [v for v in (require("x"), require("y")) if v]
        require_columns(node, schema, named, "model")


def _apply_schema(schema, algorithm: str | None, suffix: str):
    if schema is None or algorithm is None:
        return None
    added: tuple
    if algorithm == "tree":
        node_col, prob_col, val_col = (f"{c}{suffix}" for c in TREE_COLUMNS)
        added = ((node_col, NUM), (prob_col, PROB), (val_col, CHAR))
    elif algorithm == "regression":
        added = ((f"{REGRESSION_COLUMN}{suffix}", NUM),)
    else:
        added = ((f"{CLUSTER_COLUMN}{suffix}", NUM),)
    return tuple(schema) + added


def _check_sink(node: Node, table_in, feeds, out, issues, require_columns) -> None:
    if node.op in ("file", "report"):
        name = node.params.get("name", "")
        if "/" in name or "\\" in name:
            issues.append(Issue("param", node.node_id,
                                f"name must not contain path separators: {name}"))
        table_in(node.node_id, None)
        return
    chart_kind = node.params.get("kind")
    if chart_kind is None:
        issues.append(Issue("param", node.node_id, "chart needs parameter kind"))
        return
    if chart_kind in MODEL_CHARTS:
        table_in(node.node_id, "data")
        model_src = feeds.get((node.node_id, "model"))
        if model_src is not None and model_src in out:
            model_kind, algorithm = out[model_src]
            if model_kind == "model" and algorithm not in (
                    "kmeans", "agglomerative", "dbscan", None):
                issues.append(Issue("param", node.node_id,
                                    f"{chart_kind} chart needs a clustering "
                                    f"model, got {algorithm}"))
    elif chart_kind == "attribute-distribution":
        schema = table_in(node.node_id, None)
        column = node.params.get("column")
        if not column:
            issues.append(Issue("param", node.node_id,
                                "distribution chart needs parameter column"))
        else:
            require_columns(node, schema, [column], "chart")
    elif chart_kind == "regression-scoring":
        schema = table_in(node.node_id, None)
        named = [node.params.get(key) for key in ("x", "score")]
        missing = [key for key, v in zip(("x", "score"), named) if not v]
        for key in missing:
            issues.append(Issue("param", node.node_id,
                                f"scoring chart needs parameter {key}"))
        require_columns(node, schema, [v for v in named if v], "chart")
    else:
        issues.append(Issue("param", node.node_id,
                            f"unknown chart kind: {chart_kind}"))


# --- execution ------------------------------------------------------------


@dataclass
class RunEnv:
    out_dir: Path
    seed: int
    cube: Cube | None = None
    dso: object = None            # DsoStore, kept loose to avoid a cycle
    files_dir: Path | None = None


@dataclass(frozen=True)
class RunResult:
    artifacts: dict[str, tuple[str, ...]]   # sink id -> relative paths
    models: dict[str, str]                  # train id -> relative path
    order: tuple[str, ...]
    manifest: str                           # relative manifest path


def merge_tables(left: Table, right: Table, keys: list[str]) -> Table:
    """Inner equi-join; left columns then right non-key columns.

    Row order: left order, then the matching right rows in right order
    (duplicate keys multiply out).
    """
    for key in keys:
        for side, table in (("left", left), ("right", right)):
            if key not in table.column_names:
                raise TransformError(f"join key not in {side} table: {key}")
    left_idx = [left.index_of(k) for k in keys]
    right_idx = [right.index_of(k) for k in keys]
    right_rest = [i for i, c in enumerate(right.columns) if c.name not in keys]
    overlap = ({c.name for c in left.columns}
               & {right.columns[i].name for i in right_rest})
    if overlap:
        raise TransformError("duplicate columns after merge: "
                             + ", ".join(sorted(overlap)))
    matches: dict[tuple, list[tuple]] = {}
    for row in right.rows:
        matches.setdefault(tuple(row[i] for i in right_idx), []).append(row)
    columns = list(left.columns) + [right.columns[i] for i in right_rest]
    rows = []
    for row in left.rows:
        for other in matches.get(tuple(row[i] for i in left_idx), []):
            rows.append(row + tuple(other[i] for i in right_rest))
    return Table(columns, rows)


def _run_source(node: Node, env: RunEnv) -> Table:
    if node.op == "cube_extract":
        if env.cube is None:
            raise TransformError("no cube available to extract from")
        return env.cube.extract_dataset(
            _split_list(node.params["attributes"]),
            node.params.get("key_figure", KEY_FIGURE))
    if node.op == "cube_query":
        if env.cube is None:
            raise TransformError("no cube available to query")
        filters = []
        where = node.params.get("where")
        if where:
            for name, op, args in _parse_where(where):
                if op == "between":
                    filters.append((name, ("range", args[0], args[1])))
                else:
                    filters.append((name, args))
        spec = QuerySpec(_split_list(node.params["group_by"]), filters,
                         node.params.get("aggregate", "sum"))
        return env.cube.query(spec)
    if node.op == "dso":
        if env.dso is None:
            raise TransformError("no active store available")
        columns = [Column(f.name, NUM if f.name == "WRBTR" else CHAR)
                   for f in CASHFLOW_SCHEMA.fields]
        rows = []
        for record in env.dso.records():
            rows.append(tuple(
                record.amount_lc if f.name == "WRBTR" else record.field_value(f.name)
                for f in CASHFLOW_SCHEMA.fields))
        return Table(columns, rows)
    # flat file source
    from .deploy import read_flat_file
    path = Path(node.params["path"])
    if not path.is_absolute():
        if env.files_dir is None:
            raise TransformError(f"relative path without a file root: {path}")
        path = env.files_dir / path
    if not path.exists():
        raise NotFound(f"source file does not exist: {path}")
    table = read_flat_file(path)
    numeric = set(_split_list(node.params.get("numeric", "")))
    if not numeric:
        return table
    columns = [Column(c.name, NUM if c.name in numeric else c.kind)
               for c in table.columns]
    idx = [i for i, c in enumerate(columns) if c.name in numeric]
    rows = [tuple(float(v) if i in idx else v for i, v in enumerate(row))
            for row in table.rows]
    return Table(columns, rows)


def _apply_filter(table: Table, clauses) -> Table:
    checks = []
    for name, op, args in clauses:
        i = table.index_of(name)
        numeric = table.columns[i].kind == NUM
        if op == "between":
            if numeric:
                lo, hi = float(args[0]), float(args[1])
                checks.append(lambda row, i=i, lo=lo, hi=hi: lo <= float(row[i]) <= hi)
            else:
                lo, hi = args
                checks.append(lambda row, i=i, lo=lo, hi=hi: lo <= str(row[i]) <= hi)
        elif numeric:
            allowed = {float(a) for a in args}
            checks.append(lambda row, i=i, allowed=allowed: float(row[i]) in allowed)
        else:
            allowed = set(args)
            checks.append(lambda row, i=i, allowed=allowed: str(row[i]) in allowed)
    rows = [row for row in table.rows if all(ok(row) for ok in checks)]
    return Table(list(table.columns), rows)


def _run_transform(node: Node, inputs: dict, env: RunEnv):
    op = node.op
    if op == "select":
        return inputs[None].select(_split_list(node.params["columns"]))
    if op == "filter":
        return _apply_filter(inputs[None], _parse_where(node.params["where"]))
    if op == "bin":
        table: Table = inputs[None]
        column = node.params["column"]
        if table.column(column).kind != NUM:
            raise TransformError(f"cannot bin non-numeric column: {column}")
        bins = int(node.params.get("bins", DEFAULT_BINS))
        values = [float(v) for v in table.values(column)]
        if not values:
            return table.with_column(Column(f"{column}_BIN", CHAR), [])
        binning = fit_binning(values, bins)
        labels = [str(binning.bin_index(v)) for v in values]
        return table.with_column(Column(f"{column}_BIN", CHAR), labels)
    if op == "merge":
        return merge_tables(inputs["left"], inputs["right"],
                            _split_list(node.params["keys"]))
    # split
    fraction = float(node.params.get("fraction", "0.66"))
    spec = SplitSpec(fraction, node_seed(env.seed, node.node_id))
    train, test = train_test_split(inputs[None], spec)
    return {"train": train, "test": test}


def _run_train(node: Node, data: Table, env: RunEnv):
    algorithm = node.params["algorithm"]
    seed = node_seed(env.seed, node.node_id)
    bins = int(node.params.get("bins", DEFAULT_BINS))
    if algorithm == "tree":
        params = TreeParams(
            max_leaves=int(node.params["max_leaves"])
            if "max_leaves" in node.params else None,
            min_leaf_size=int(node.params.get("min_leaf_size", "1")),
            min_gain=float(node.params.get("min_gain", "0.0")))
        features = _split_list(node.params["features"]) \
            if "features" in node.params else None
        return tree_fit(data, node.params["target"], params, features, bins)
    if algorithm == "regression":
        return regression_fit(data, node.params["x"], node.params["y"])
    attributes = _split_list(node.params["attributes"])
    weights = None
    if "weights" in node.params:
        weights = {}
        for part in _split_list(node.params["weights"]):
            name, _, w = part.partition(":")
            weights[name.strip()] = float(w)
    space = space_from_table(data, attributes, weights, bins)
    if algorithm == "kmeans":
        return kmeans_fit(data, space, int(node.params["k"]), seed,
                          max_iter=int(node.params.get("max_iter", "100")),
                          n_restarts=int(node.params.get("restarts", "10")))
    if algorithm == "agglomerative":
        dendrogram = agglomerative_fit(data, space,
                                       node.params.get("linkage", "single"))
        return dendrogram_cut(dendrogram, int(node.params["k"]), data, space)
    return dbscan_fit(data, space, float(node.params["eps"]),
                      int(node.params.get("min_pts", "1")))


def _apply_requires(model) -> list[str]:
    if isinstance(model, TreeModel):
        return [name for name, _ in model.features]
    if isinstance(model, ClusterModel):
        return [a.name for a in model.space.attributes] if model.space else []
    if isinstance(model, RegressionModel):
        return [model.x_name]
    return []


def _run_apply(node: Node, model, data: Table, suffix: str) -> Table:
    # loaded artifacts bypass static schema checks; fail cleanly here instead
    missing = [n for n in _apply_requires(model) if n not in data.column_names]
    if missing:
        raise TransformError("model input column(s) not in data: "
                             + ", ".join(missing))
    if isinstance(model, TreeModel):
        names = [f"{c}{suffix}" for c in TREE_COLUMNS]
        predictions = [tree_predict(model, data.record(i))
                       for i in range(len(data.rows))]
        table = data.with_column(Column(names[0], NUM),
                                 [p.node_id for p in predictions])
        table = table.with_column(Column(names[1], PROB),
                                  [p.probability for p in predictions])
        return table.with_column(Column(names[2], CHAR),
                                 [p.value for p in predictions])
    if isinstance(model, ClusterModel):
        labels = [cluster_assign(model, data.record(i))
                  for i in range(len(data.rows))]
        return data.with_column(Column(f"{CLUSTER_COLUMN}{suffix}", NUM), labels)
    if isinstance(model, RegressionModel):
        scores = [regression_score(model, data.record(i))
                  for i in range(len(data.rows))]
        return data.with_column(Column(f"{REGRESSION_COLUMN}{suffix}", NUM), scores)
    raise TransformError(f"cannot apply a {type(model).__name__}")


def _distribution_pairs(table: Table, column: str) -> tuple:
    kind = table.column(column).kind
    values = table.values(column)
    if not values:
        raise TransformError(f"no rows to chart for column {column}")
    if kind == NUM:
        floats = [float(v) for v in values]
        binning = fit_binning(floats, DEFAULT_BINS)
        counts = [0] * binning.n_bins
        for v in floats:
            counts[binning.bin_index(v)] += 1
        return tuple(
            (f"{format_number(binning.edges[i])}..{format_number(binning.edges[i + 1])}",
             counts[i])
            for i in range(binning.n_bins))
    tallies: dict[str, int] = {}
    for v in values:
        tallies[str(v)] = tallies.get(str(v), 0) + 1
    return tuple(sorted(tallies.items()))


def _run_chart(node: Node, inputs: dict, out_dir: Path) -> tuple[Path, Path]:
    chart_kind = node.params["kind"]
    title = node.params.get("title", chart_kind)
    if chart_kind == "overall-influence":
        chart = influence_chart(inputs["model"], inputs["data"])
        payload = chart.scores
    elif chart_kind == "inter-cluster-distance":
        payload = distance_report(inputs["model"], inputs["data"]).inter
    elif chart_kind == "intra-cluster-distance":
        report = distance_report(inputs["model"], inputs["data"])
        payload = tuple((f"C{i}", v) for i, v in enumerate(report.intra))
    elif chart_kind == "attribute-distribution":
        payload = _distribution_pairs(inputs[None], node.params["column"])
    else:
        table: Table = inputs[None]
        x_name, score_name = node.params["x"], node.params["score"]
        seen: dict[str, float] = {}
        for x, score in zip(table.values(x_name), table.values(score_name)):
            seen.setdefault(str(x), float(score))
        payload = tuple(sorted(seen.items()))
    spec = ChartSpec(chart_kind, title, tuple(payload))
    name = node.params.get("name", node.node_id)
    return render_chart(spec, out_dir / name)


def run_process(process: AnalysisProcess, env: RunEnv) -> RunResult:
    """Execute every node; collect sink artifacts under ``env.out_dir``.

    A node failure marks its downstream nodes skipped, the rest of the
    graph still runs, and the run ends with a RunError naming every
    failure.  On success the run directory also holds a manifest and one
    JSON artifact per trained model.
    """
    issues = validate_process(process)
    if issues:
        raise ValidationError("invalid process: "
                              + "; ".join(str(i) for i in issues))
    nodes = process.node_map()
    order = _topo_order(process)
    depths = model_depths(process)
    feeds: dict[tuple[str, str | None], tuple[str, str | None]] = {}
    for edge in process.edges:
        feeds[(edge.dst, _resolve_in_port(edge, nodes))] = (edge.src, edge.src_port)

    env.out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[tuple[str, str | None], object] = {}
    artifacts: dict[str, tuple[str, ...]] = {}
    models: dict[str, str] = {}
    failures: dict[str, str] = {}
    dead: set[str] = set()
    skipped: list[str] = []

    for node_id in order:
        node = nodes[node_id]
        wanted = [(port, feeds.get((node_id, port)))
                  for port in _in_ports(node)]
        if any(src is not None and src[0] in dead for _, src in wanted):
            dead.add(node_id)
            skipped.append(node_id)
            continue
        try:
            inputs = {port: outputs[src] for port, src in wanted
                      if src is not None}
            if (node.kind, node.op) == ("model", "apply") and "model" not in inputs:
                path = Path(node.params["model_path"])
                if not path.is_absolute() and env.files_dir is not None:
                    path = env.files_dir / path
                inputs["model"] = load_model(path)
            result = _execute(node, inputs, env, depths, artifacts, models)
        except CashmineError as exc:
            failures[node_id] = str(exc)
            dead.add(node_id)
            continue
        if isinstance(result, dict):      # split: one table per output port
            for port, value in result.items():
                outputs[(node_id, port)] = value
        else:
            outputs[(node_id, None)] = result

    manifest = {
        "process": process.name,
        "seed": env.seed,
        "sinks": {k: list(v) for k, v in sorted(artifacts.items())},
        "models": dict(sorted(models.items())),
        "skipped": sorted(skipped),
        "failed": dict(sorted(failures.items())),
    }
    manifest_path = env.out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                             encoding="utf-8")
    if failures:
        raise RunError(failures, skipped)
    return RunResult(artifacts, models, tuple(order), manifest_path.name)


def _execute(node: Node, inputs: dict, env: RunEnv, depths: dict,
             artifacts: dict, models: dict):
    if node.kind == "source":
        return _run_source(node, env)
    if node.kind == "transform":
        return _run_transform(node, inputs, env)
    if (node.kind, node.op) == ("model", "train"):
        model = _run_train(node, inputs[None], env)
        path = env.out_dir / f"{node.node_id}.model.json"
        save_model(model, path)
        models[node.node_id] = path.name
        return model
    if (node.kind, node.op) == ("model", "apply"):
        suffix = f"{depths[node.node_id]:03d}"
        return _run_apply(node, inputs["model"], inputs["data"], suffix)
    # sinks
    if node.op == "file":
        name = node.params.get("name", f"{node.node_id}.csv")
        path = write_flat_file(inputs[None], env.out_dir / name)
        artifacts[node.node_id] = (path.name,)
    elif node.op == "report":
        name = node.params.get("name", f"{node.node_id}.jsonl")
        path = write_report_feed(inputs[None], env.out_dir / name)
        artifacts[node.node_id] = (path.name,)
    else:
        svg, txt = _run_chart(node, inputs, env.out_dir)
        artifacts[node.node_id] = (svg.name, txt.name)
    return inputs.get(None) if None in inputs else inputs.get("data")
