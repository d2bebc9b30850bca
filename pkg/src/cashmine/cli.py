"""Command-line client driving the pipeline service.

Without ``--server`` the commands run against an in-process service bound
to ``--workspace``; with it they talk to a remote instance over HTTP.  Both
paths go through the same request/response models.
"""

from __future__ import annotations

from pathlib import Path

import click

from .workspace import DEFAULT_SEED


class Client:
    def __init__(self, workspace: str, server: str | None):
        self.workspace = workspace
        self.server = server
        self._http = None

    def _connect(self):
        if self._http is None:
            if self.server:
                import httpx
                self._http = httpx.Client(base_url=self.server, timeout=600.0)
            else:
                import warnings
                with warnings.catch_warnings():
                    # in-process transport; the shim warning is not actionable here
                    warnings.simplefilter("ignore")
                    from starlette.testclient import TestClient

                from .service import create_app
                self._http = TestClient(create_app(self.workspace))
        return self._http

    def call(self, method: str, path: str, **kwargs) -> dict:
        response = self._connect().request(method, path, **kwargs)
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            click.echo(f"error: {detail}", err=True)
            raise SystemExit(1)
        return response.json()


@click.group()
@click.option("--workspace", "-w", default="workspace", show_default=True,
              envvar="CASHMINE_WORKSPACE",
              help="Workspace directory (created on first use).")
@click.option("--server", default=None, envvar="CASHMINE_SERVER",
              help="URL of a running service; omit to work in-process.")
@click.pass_context
def main(ctx: click.Context, workspace: str, server: str | None) -> None:
    """Cash-flow mining pipeline: stage, activate, load, run, report."""
    ctx.obj = Client(workspace, server)


@main.command()
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--records", default=1000, show_default=True, type=int)
@click.option("--vendors", default=20, show_default=True, type=int)
@click.option("--gls", default=8, show_default=True, type=int)
@click.option("--flip", default=0.0, show_default=True, type=float,
              help="Probability a posting books against a non-ruled account.")
@click.option("--spec", type=click.Path(exists=True, dir_okay=False),
              help="Generator spec file (key = value lines).")
@click.option("--name", default=None, help="Output file name.")
@click.pass_obj
def generate(client: Client, seed: int, records: int, vendors: int, gls: int,
             flip: float, spec: str | None, name: str | None) -> None:
    """Write a synthetic source file into the workspace."""
    payload: dict = {"seed": seed, "records": records, "vendors": vendors,
                     "gls": gls, "flip": flip, "name": name}
    if spec:
        payload["spec_text"] = Path(spec).read_text(encoding="utf-8")
    data = client.call("POST", "/generate", json=payload)
    click.echo(f"wrote files/{data['file']} ({data['records']} records)")


@main.command()
@click.argument("file")
@click.pass_obj
def ingest(client: Client, file: str) -> None:
    """Parse a source file and stage it as a new request."""
    path = Path(file)
    if path.exists():
        payload = {"name": path.name,
                   "content": path.read_text(encoding="utf-8")}
    elif "/" not in file and "\\" not in file:
        payload = {"file": file}    # already inside the workspace
    else:
        click.echo(f"error: no such file: {file}", err=True)
        raise SystemExit(2)
    data = client.call("POST", "/ingest", json=payload)
    cleanse = data["cleanse"]
    click.echo(f"request {data['request_id']}: staged {data['rows']} rows "
               f"({data['records']} records, {len(data['errors'])} errors)")
    click.echo(f"cleanse: {cleanse['duplicates_removed']} duplicates removed, "
               f"{cleanse['missing_filled']} missing filled, "
               f"{cleanse['outliers_flagged']} outliers flagged")
    for err in data["errors"]:
        click.echo(f"  row {err['row']}: {err['field']}: {err['reason']}")


@main.command()
@click.argument("request_id", type=int)
@click.argument("row", type=int)
@click.argument("field")
@click.argument("value")
@click.pass_obj
def edit(client: Client, request_id: int, row: int, field: str, value: str) -> None:
    """Fix one field of one staged row."""
    data = client.call("POST", "/edit", json={
        "request_id": request_id, "row": row, "field": field, "value": value})
    if data["error"]:
        click.echo(f"row still in error: {data['error']}")
        raise SystemExit(1)
    click.echo(f"row {row} is now {data['status']}")


@main.command()
@click.argument("request_id", type=int)
@click.pass_obj
def activate(client: Client, request_id: int) -> None:
    """Move a staged request into the active store (overwrite by key)."""
    data = client.call("POST", f"/activate/{request_id}")
    click.echo(f"activated request {request_id}: {data['inserted']} inserted, "
               f"{data['overwritten']} overwritten, "
               f"{data['active']} records active")


@main.command("load-cube")
@click.pass_obj
def load_cube(client: Client) -> None:
    """Load the active store into the analysis cube."""
    data = client.call("POST", "/load-cube")
    dims = ", ".join(str(n) for n in data["dim_rows"])
    click.echo(f"loaded {data['facts']} facts (dimension rows: {dims})")


@main.command()
@click.argument("process")
@click.pass_obj
def validate(client: Client, process: str) -> None:
    """Check an analysis process without running it."""
    payload = {"process": _process_payload(process)}
    data = client.call("POST", "/validate", json=payload)
    if data["ok"]:
        click.echo("process is valid")
        return
    for issue in data["issues"]:
        click.echo(issue)
    raise SystemExit(1)


@main.command()
@click.argument("process")
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--force", is_flag=True,
              help="Overwrite an existing run directory.")
@click.pass_obj
def run(client: Client, process: str, seed: int, force: bool) -> None:
    """Execute an analysis process (template name or process file)."""
    payload = {"process": _process_payload(process), "seed": seed,
               "force": force}
    data = client.call("POST", "/run", json=payload)
    click.echo(f"run {data['run_id']} finished")
    for sink in sorted(data["artifacts"]):
        for name in data["artifacts"][sink]:
            click.echo(f"  {sink}: runs/{data['run_id']}/{name}")


@main.command()
@click.argument("run_id")
@click.option("--format", "fmt", type=click.Choice(["text", "delimited"]),
              default="text", show_default=True)
@click.pass_obj
def report(client: Client, run_id: str, fmt: str) -> None:
    """Print every sink artifact of a finished run."""
    data = client.call("GET", f"/report/{run_id}", params={"format": fmt})
    click.echo(data["body"], nl=False)


@main.command()
@click.pass_obj
def status(client: Client) -> None:
    """Summarize workspace state."""
    data = client.call("GET", "/status")
    click.echo(f"workspace: {data['root']}")
    click.echo(f"files: {', '.join(data['files']) or '(none)'}")
    click.echo(f"staging requests: {data['requests']}")
    click.echo(f"active records: {data['active_records']}")
    click.echo(f"cube loaded: {'yes' if data['cube_loaded'] else 'no'}")
    click.echo(f"runs: {', '.join(data['runs']) or '(none)'}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8391, show_default=True, type=int)
@click.pass_obj
def serve(client: Client, host: str, port: int) -> None:
    """Run the workspace service over HTTP."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(client.workspace), host=host, port=port)


def _process_payload(process: str) -> str:
    """Send file contents inline; pass template names through."""
    path = Path(process)
    if path.exists() and path.is_file():
        return path.read_text(encoding="utf-8")
    return process


if __name__ == "__main__":
    main()
