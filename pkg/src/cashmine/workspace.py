"""Workspace: durable pipeline state under one directory tree.

    files/      source flat files (uploaded or generated)
    psa/        staging requests, one JSON per request + error sidecars
    dso/        active store snapshot and append-only change log
    cube/       record snapshot backing the loaded cube
    runs/       one directory per analysis-process run

Every mutating operation takes a file lock, so one writer at a time per
workspace.  All state files are plain JSON/CSV, inspectable and
deterministic for identical histories.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from .apd import RunEnv, RunResult, parse_process, run_process, validate_process
from .cube import Cube, LoadStats
from .deploy import read_flat_file, render_table_delimited, render_table_text
from .errors import CashmineError, NotFound, StageError
from .ingest import (
    ParseError,
    RawTransaction,
    apply_defaults,
    parse_source_file,
    serialize_transactions,
    write_error_sidecar,
)
from .schema import CASHFLOW_SCHEMA, format_money
from .staging import (
    ChangeLogEntry,
    CleansePolicy,
    CleanseReport,
    DsoRecord,
    DsoStore,
    PsaRequest,
    PsaRow,
    PsaStore,
    cleanse,
)
from .synthgen import GenSpec, generate_records
from .templates import template_text

DEFAULT_SEED = 12345


@dataclass(frozen=True)
class IngestResult:
    request_id: int
    file: str
    rows: int
    records: int
    errors: list[ParseError]
    cleanse: CleanseReport


def _fields(record: RawTransaction) -> dict[str, str]:
    return record.as_field_dict(CASHFLOW_SCHEMA)


def _record(values: dict[str, str]) -> RawTransaction:
    return apply_defaults(dict(values), CASHFLOW_SCHEMA)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def _safe_name(name: str) -> str:
    if not name or "/" in name or "\\" in name or name.startswith("."):
        raise CashmineError(f"unusable file name: {name!r}")
    return name


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.files_dir = self.root / "files"
        self.psa_dir = self.root / "psa"
        self.dso_dir = self.root / "dso"
        self.cube_dir = self.root / "cube"
        self.runs_dir = self.root / "runs"

    @classmethod
    def ensure(cls, root: str | Path) -> "Workspace":
        ws = cls(root)
        for d in (ws.root, ws.files_dir, ws.psa_dir, ws.dso_dir,
                  ws.cube_dir, ws.runs_dir):
            d.mkdir(parents=True, exist_ok=True)
        return ws

    def lock(self) -> FileLock:
        return FileLock(self.root / ".lock")

    # --- sources ---------------------------------------------------------

    def add_source_file(self, name: str, content: str) -> str:
        name = _safe_name(name)
        with self.lock():
            (self.files_dir / name).write_text(content, encoding="utf-8")
        return name

    def generate(self, spec: GenSpec, name: str | None = None) -> tuple[str, int]:
        records = generate_records(spec)
        name = _safe_name(name or f"synthetic-s{spec.seed}.csv")
        with self.lock():
            (self.files_dir / name).write_text(
                serialize_transactions(records), encoding="utf-8")
        return name, len(records)

    # --- staging ----------------------------------------------------------

    def _request_path(self, request_id: int) -> Path:
        return self.psa_dir / f"request_{request_id:04d}.json"

    def _load_request(self, request_id: int) -> PsaRequest:
        path = self._request_path(request_id)
        if not path.exists():
            raise NotFound(f"no such request: {request_id}")
        data = json.loads(path.read_text(encoding="utf-8"))
        rows = [PsaRow(r["values"], r["status"], r["error"], r["original"])
                for r in data["rows"]]
        return PsaRequest(data["request_id"], rows)

    def _save_request(self, request: PsaRequest) -> None:
        payload = {
            "request_id": request.request_id,
            "rows": [{"values": row.values, "status": row.status,
                      "error": row.error, "original": row.original}
                     for row in request.rows],
        }
        _write_json(self._request_path(request.request_id), payload)

    def _request_count(self) -> int:
        return len(list(self.psa_dir.glob("request_*.json")))

    def ingest(self, file_name: str,
               policy: CleansePolicy = CleansePolicy()) -> IngestResult:
        path = self.files_dir / _safe_name(file_name)
        if not path.exists():
            raise NotFound(f"no such source file: {file_name}")
        records, errors = parse_source_file(
            path.read_text(encoding="utf-8"), CASHFLOW_SCHEMA)
        clean, report = cleanse(records, policy)
        with self.lock():
            request_id = self._request_count() + 1
            staging = PsaStore(CASHFLOW_SCHEMA)
            staging.append(clean, errors)
            request = PsaRequest(request_id, staging.requests[0].rows)
            self._save_request(request)
            if errors:
                write_error_sidecar(
                    errors, self.psa_dir / f"request_{request_id:04d}.errors.csv")
        return IngestResult(request_id, file_name, len(request.rows),
                            len(clean), errors, report)

    def edit(self, request_id: int, row_index: int, field_name: str,
             value: str) -> PsaRow:
        with self.lock():
            request = self._load_request(request_id)
            store = PsaStore(CASHFLOW_SCHEMA)
            store.requests = [request]
            row = store.edit(1, row_index, field_name, value)
            request = PsaRequest(request_id, request.rows)
            self._save_request(request)
        return row

    # --- activation --------------------------------------------------------

    def _active_path(self) -> Path:
        return self.dso_dir / "active.json"

    def _changelog_path(self) -> Path:
        return self.dso_dir / "changelog.jsonl"

    def _load_dso(self) -> DsoStore:
        store = DsoStore()
        path = self._active_path()
        if path.exists():
            for item in json.loads(path.read_text(encoding="utf-8")):
                record = _record(item["values"])
                store.active[record.key] = DsoRecord(record, item["version"])
        return store

    def _save_dso(self, store: DsoStore) -> None:
        payload = [{"values": _fields(rec.record), "version": rec.version}
                   for rec in store.active.values()]
        _write_json(self._active_path(), payload)

    def activate(self, request_id: int) -> dict:
        with self.lock():
            request = self._load_request(request_id)
            store = self._load_dso()
            entries = store.activate(request, CASHFLOW_SCHEMA)
            self._save_dso(store)
            with self._changelog_path().open("a", encoding="utf-8") as fh:
                for e in entries:
                    fh.write(json.dumps({
                        "key": list(e.key),
                        "action": e.action,
                        "before": _fields(e.before) if e.before else None,
                        "after": _fields(e.after),
                        "request_id": e.request_id,
                    }) + "\n")
        inserted = sum(1 for e in entries if e.action == "insert")
        return {"inserted": inserted, "overwritten": len(entries) - inserted,
                "active": len(store.active)}

    def change_log(self) -> list[ChangeLogEntry]:
        path = self._changelog_path()
        if not path.exists():
            return []
        entries = []
        for line in path.read_text(encoding="utf-8").splitlines():
            d = json.loads(line)
            entries.append(ChangeLogEntry(
                tuple(d["key"]), d["action"],
                _record(d["before"]) if d["before"] else None,
                _record(d["after"]), d["request_id"]))
        return entries

    # --- cube ---------------------------------------------------------------

    def _cube_path(self) -> Path:
        return self.cube_dir / "cube.json"

    def load_cube(self) -> LoadStats:
        with self.lock():
            store = self._load_dso()
            records = store.records()
            if not records:
                raise StageError(
                    "nothing to load: activate a staging request first")
            cube = Cube()
            stats = cube.load(records)
            _write_json(self._cube_path(), {
                "records": [_fields(r) for r in records],
                "facts": stats.facts_added,
                "dim_rows": list(stats.dim_rows_added),
                "total": format_money(cube.grand_total()),
            })
        return stats

    def cube_loaded(self) -> bool:
        return self._cube_path().exists()

    def _load_cube(self) -> Cube | None:
        path = self._cube_path()
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        cube = Cube()
        cube.load([_record(v) for v in data["records"]])
        return cube

    # --- analysis processes ---------------------------------------------------

    def resolve_process(self, spec: str) -> str:
        """Template name, workspace-relative file, or inline process text."""
        if "\n" in spec:
            return spec
        built_in = template_text(spec)
        if built_in is not None:
            return built_in
        for base in (self.files_dir, self.root):
            path = base / spec
            if path.exists():
                return path.read_text(encoding="utf-8")
        raise NotFound(f"no such process or template: {spec}")

    def validate(self, spec: str) -> list:
        process = parse_process(self.resolve_process(spec))
        return validate_process(process)

    def run(self, spec: str, seed: int = DEFAULT_SEED,
            force: bool = False) -> tuple[str, RunResult]:
        process = parse_process(self.resolve_process(spec))
        needs_cube = any(n.kind == "source" and n.op.startswith("cube")
                         for n in process.nodes)
        needs_dso = any((n.kind, n.op) == ("source", "dso")
                        for n in process.nodes)
        if needs_cube and not self.cube_loaded():
            raise StageError("run requires a loaded cube: run load-cube first")
        dso = self._load_dso()
        if needs_dso and not dso.active:
            raise StageError("run requires activated data: "
                             "activate a staging request first")
        run_id = f"{process.name}-s{seed}"
        run_dir = self.runs_dir / run_id
        with self.lock():
            if run_dir.exists():
                if not force:
                    raise CashmineError(
                        f"run directory exists: {run_id} (re-run with force)")
                shutil.rmtree(run_dir)
            env = RunEnv(out_dir=run_dir, seed=seed, cube=self._load_cube(),
                         dso=dso, files_dir=self.files_dir)
            result = run_process(process, env)
        return run_id, result

    def run_dir(self, run_id: str) -> Path:
        path = self.runs_dir / run_id
        if not path.exists():
            raise NotFound(f"no such run: {run_id}")
        return path

    def report(self, run_id: str, fmt: str = "text") -> str:
        """Render every sink artifact of one run."""
        if fmt not in ("text", "delimited"):
            raise CashmineError(f"unknown report format: {fmt}")
        run_dir = self.run_dir(run_id)
        manifest = json.loads((run_dir / "manifest.json").read_text("utf-8"))
        sections = []
        for sink_id in sorted(manifest["sinks"]):
            for name in manifest["sinks"][sink_id]:
                path = run_dir / name
                if name.endswith(".csv"):
                    table = read_flat_file(path)
                    body = (render_table_text(table) if fmt == "text"
                            else render_table_delimited(table))
                elif name.endswith(".txt") or name.endswith(".jsonl"):
                    body = path.read_text(encoding="utf-8")
                else:
                    continue    # vector charts have a .txt twin
                sections.append(f"== {sink_id}: {name} ==\n{body}")
        return "\n".join(sections)

    # --- introspection ----------------------------------------------------------

    def status(self) -> dict:
        dso = self._load_dso()
        return {
            "root": str(self.root),
            "files": sorted(p.name for p in self.files_dir.glob("*")),
            "requests": self._request_count(),
            "active_records": len(dso.active),
            "cube_loaded": self.cube_loaded(),
            "runs": sorted(p.name for p in self.runs_dir.iterdir()
                           if p.is_dir()),
        }
