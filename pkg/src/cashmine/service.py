"""HTTP service over a workspace.

One service instance wraps one workspace directory; the CLI talks to it
either in-process or over the network, so local and remote usage share one
code path.  Errors map onto status codes: missing objects are 404, refused
or out-of-order operations are 409, bad input is 400.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (
    ActivationRefused,
    CashmineError,
    NotFound,
    RunError,
    StageError,
)
from .synthgen import GenSpec, parse_genspec
from .workspace import DEFAULT_SEED, Workspace


class GenerateRequest(BaseModel):
    seed: int = DEFAULT_SEED
    records: int = 1000
    vendors: int = 20
    gls: int = 8
    flip: float = 0.0
    name: str | None = None
    spec_text: str | None = None     # overrides the scalar fields when given


class GenerateResponse(BaseModel):
    file: str
    records: int


class IngestRequest(BaseModel):
    file: str | None = None          # name of an existing workspace file
    name: str | None = None          # target name for uploaded content
    content: str | None = None


class ParseErrorOut(BaseModel):
    row: int
    field: str
    reason: str


class CleanseOut(BaseModel):
    duplicates_removed: int
    missing_filled: int
    outliers_flagged: int


class IngestResponse(BaseModel):
    request_id: int
    file: str
    rows: int
    records: int
    errors: list[ParseErrorOut]
    cleanse: CleanseOut


class EditRequest(BaseModel):
    request_id: int
    row: int
    field: str
    value: str


class EditResponse(BaseModel):
    status: str
    error: str | None


class ActivateResponse(BaseModel):
    inserted: int
    overwritten: int
    active: int


class LoadCubeResponse(BaseModel):
    facts: int
    dim_rows: list[int]


class ProcessRequest(BaseModel):
    process: str                     # template name, file name, or inline text
    seed: int = DEFAULT_SEED
    force: bool = False


class ValidateResponse(BaseModel):
    ok: bool
    issues: list[str]


class RunResponse(BaseModel):
    run_id: str
    artifacts: dict[str, list[str]]
    models: dict[str, str]


class ReportResponse(BaseModel):
    run_id: str
    format: str
    body: str


class StatusResponse(BaseModel):
    root: str
    files: list[str]
    requests: int
    active_records: int
    cube_loaded: bool
    runs: list[str]


_STATUS_BY_ERROR = (
    (NotFound, 404),
    (ActivationRefused, 409),
    (StageError, 409),
    (RunError, 500),
)


def create_app(root: str | Path) -> FastAPI:
    workspace = Workspace.ensure(root)
    app = FastAPI(title="cashmine", version="1.0.0")

    @app.exception_handler(CashmineError)
    async def _cashmine_error(_, exc: CashmineError):
        status = 400
        for err_type, code in _STATUS_BY_ERROR:
            if isinstance(exc, err_type):
                status = code
                break
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/status", response_model=StatusResponse)
    def status() -> StatusResponse:
        return StatusResponse(**workspace.status())

    @app.post("/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        if req.spec_text is not None:
            spec = parse_genspec(req.spec_text)
        else:
            spec = GenSpec(seed=req.seed, n_records=req.records,
                           n_vendors=req.vendors, n_gl_accounts=req.gls,
                           flip_probability=req.flip)
        name, n = workspace.generate(spec, req.name)
        return GenerateResponse(file=name, records=n)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(req: IngestRequest) -> IngestResponse:
        if req.content is not None:
            file_name = workspace.add_source_file(
                req.name or "upload.csv", req.content)
        elif req.file:
            file_name = req.file
        else:
            raise CashmineError("ingest needs a file name or inline content")
        result = workspace.ingest(file_name)
        return IngestResponse(
            request_id=result.request_id,
            file=result.file,
            rows=result.rows,
            records=result.records,
            errors=[ParseErrorOut(row=e.row, field=e.field, reason=e.reason)
                    for e in result.errors],
            cleanse=CleanseOut(
                duplicates_removed=result.cleanse.duplicates_removed,
                missing_filled=result.cleanse.missing_filled,
                outliers_flagged=len(result.cleanse.outliers_flagged)),
        )

    @app.post("/edit", response_model=EditResponse)
    def edit(req: EditRequest) -> EditResponse:
        row = workspace.edit(req.request_id, req.row, req.field, req.value)
        return EditResponse(status=row.status, error=row.error)

    @app.post("/activate/{request_id}", response_model=ActivateResponse)
    def activate(request_id: int) -> ActivateResponse:
        return ActivateResponse(**workspace.activate(request_id))

    @app.post("/load-cube", response_model=LoadCubeResponse)
    def load_cube() -> LoadCubeResponse:
        stats = workspace.load_cube()
        return LoadCubeResponse(facts=stats.facts_added,
                                dim_rows=list(stats.dim_rows_added))

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ProcessRequest) -> ValidateResponse:
        issues = workspace.validate(req.process)
        return ValidateResponse(ok=not issues, issues=[str(i) for i in issues])

    @app.post("/run", response_model=RunResponse)
    def run(req: ProcessRequest) -> RunResponse:
        run_id, result = workspace.run(req.process, req.seed, req.force)
        return RunResponse(
            run_id=run_id,
            artifacts={k: list(v) for k, v in result.artifacts.items()},
            models=dict(result.models))

    @app.get("/report/{run_id}", response_model=ReportResponse)
    def report(run_id: str, format: str = "text") -> ReportResponse:
        body = workspace.report(run_id, format)
        return ReportResponse(run_id=run_id, format=format, body=body)

    return app
