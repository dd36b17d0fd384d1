"""Command-line front end.

All bench/report commands are thin clients of the HTTP service: by default
they talk to the FastAPI app in-process (no server needed); pass --server
to target a running `tunbench serve` instance. `tunnel run` drives real
sockets and therefore always runs locally.

Exit codes: 0 success, 1 config/spec/usage errors, 2 runtime errors.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import httpx

from .errors import (
    CalibrationError,
    ConfigError,
    FormatError,
    IoError,
    SpecError,
    TunbenchError,
)
from .report import ComparisonTable, load_table
from .scenario import load_scenario, persist_results

USAGE_ERRORS = ("ConfigError", "SpecError", "FormatError", "CalibrationError")


class ServiceError(TunbenchError):
    def __init__(self, name: str, message: str):
        super().__init__(message)
        self.name = name

    @property
    def is_usage(self) -> bool:
        return self.name in USAGE_ERRORS


class ServiceClient:
    """HTTP client for the tunbench service; in-process ASGI by default."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            # Sync in-process ASGI bridge (httpx's own ASGITransport is
            # async-only).
            from starlette.testclient import TestClient

            from .service.app import app

            self._client = TestClient(
                app, base_url="http://tunbench.internal",
                raise_server_exceptions=False)

    def post(self, path: str, payload: dict | None = None) -> dict:
        resp = self._client.post(path, json=payload or {})
        if resp.status_code != 200:
            detail = resp.json().get("detail", resp.text)
            if isinstance(detail, dict):
                raise ServiceError(detail.get("error", "TunbenchError"),
                                   detail.get("message", str(detail)))
            raise ServiceError("TunbenchError", str(detail))
        return resp.json()


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running tunbench service "
                   "(default: in-process).")
@click.pass_context
def cli(ctx, server):
    ctx.obj = {"server": server}


def _client(ctx) -> ServiceClient:
    return ServiceClient(ctx.obj["server"])


@cli.command()
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Path of the key file to write.")
@click.pass_context
def keygen(ctx, out):
    """Write a fresh static key file from a strong random source."""
    key_text = _client(ctx).post("/keygen")["key_text"]
    Path(out).write_text(key_text)
    click.echo(f"wrote {out}")


@cli.group()
def tunnel():
    """Live tunnel endpoint."""


@tunnel.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--io", "io_kind", type=click.Choice(["sim", "os"]),
              default="sim", show_default=True)
@click.option("--duration", type=float, default=None,
              help="Stop after this many seconds (default: run until ^C).")
@click.option("--local-port", type=int, default=None,
              help="Local bind port (default: the config's Port).")
def tunnel_run(config_path, io_kind, duration, local_port):
    """Run one endpoint over real sockets."""
    from .tunnel import parse_config
    from .tunnel_io import OsTunIO, TunnelRunner
    from .wire_codec import parse_key_file

    cfg = parse_config(Path(config_path).read_text())
    secret = Path(config_path).parent / cfg.secret_path
    key = parse_key_file(secret.read_text())
    io = OsTunIO(cfg.dev_name) if io_kind == "os" else None
    runner = TunnelRunner(cfg, key, io=io, local_port=local_port)
    click.echo(f"tunnel up: {cfg.proto} remote {cfg.remote_addr}:{cfg.port}")
    try:
        runner.run(duration_s=duration)
    except KeyboardInterrupt:
        pass
    click.echo(f"tunnel down: {runner.pings_received} pings received")


@cli.group()
def bench():
    """Benchmark execution."""


@bench.command("run")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def bench_run(ctx, scenario_path, out_dir):
    """Execute a scenario file and persist result tables."""
    sc = load_scenario(scenario_path)
    data = _client(ctx).post("/bench/run",
                             {"scenario": json.loads(
                                 Path(scenario_path).read_text())})
    tables = {kind: ComparisonTable.from_dict(t)
              for kind, t in data["tables"].items()}
    files = persist_results(sc, tables, out_dir)
    click.echo(f"wrote {len(files)} files to {out_dir}")


@bench.command("calibrate")
@click.option("--targets", "targets_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV of frame_bytes,throughput_bps rows.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def bench_calibrate(ctx, targets_path, out):
    """Fit link parameters to measured throughputs and save the preset."""
    targets = []
    with open(targets_path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip() or not row[0].strip()[0].isdigit():
                continue  # skip header/comment lines
            targets.append((int(row[0]), float(row[1])))
    params = _client(ctx).post("/calibrate", {"targets": targets})
    Path(out).write_text(json.dumps(params, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {out}")


FORMATS = ["csv", "json", "text_table", "plot_tsv"]


def _load_result_tables(in_dir: str, kind: str | None):
    paths = sorted(Path(in_dir).glob("*.json"))
    tables = {}
    for path in paths:
        if path.name == "manifest.json":
            continue
        if kind and path.stem != kind:
            continue
        tables[path.stem] = load_table(path)
    if not tables:
        raise IoError(f"no result tables found in {in_dir}")
    return tables


@cli.group()
def report():
    """Post-process persisted bench results."""


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@report.command("table")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(FORMATS),
              default="text_table", show_default=True)
@click.option("--kind", default=None, help="Header kind (e.g. udp_like).")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def report_table(ctx, in_dir, fmt, kind, out):
    """Render the comparison table(s)."""
    client = _client(ctx)
    parts = []
    for name, table in sorted(_load_result_tables(in_dir, kind).items()):
        text = client.post("/report/render",
                           {"table": table.to_dict(), "format": fmt})["text"]
        parts.append(f"# {name}\n{text}" if len(parts) or not kind else text)
    _emit("".join(parts), out)


@report.command("loss")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--kind", default=None)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def report_loss(ctx, in_dir, kind, out):
    """Throughput-loss table (Mbps and percent) per header kind."""
    client = _client(ctx)
    parts = []
    for name, table in sorted(_load_result_tables(in_dir, kind).items()):
        rows = client.post("/report/loss", {"table": table.to_dict()})["rows"]
        lines = ["frame_bytes,loss_mbps,loss_pct"]
        lines += [f"{r['frame_bytes']},{r['loss_mbps']},{r['loss_pct']}"
                  for r in rows]
        body = "\n".join(lines) + "\n"
        parts.append(f"# {name}\n{body}" if len(parts) or not kind else body)
    _emit("".join(parts), out)


@report.command("plot")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--kind", default=None)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def report_plot(ctx, in_dir, kind, out):
    """Plot-ready TSV (x = frame size, one series per scenario)."""
    client = _client(ctx)
    parts = []
    for name, table in sorted(_load_result_tables(in_dir, kind).items()):
        text = client.post("/report/render",
                           {"table": table.to_dict(),
                            "format": "plot_tsv"})["text"]
        parts.append(f"# {name}\n{text}" if len(parts) or not kind else text)
    _emit("".join(parts), out)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except ServiceError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1 if exc.is_usage else 2
    except (ConfigError, SpecError, FormatError, CalibrationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except TunbenchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
