"""Comparison tables, throughput-loss arithmetic, and table/plot emission.

The loss table rounds the Mbps loss to 2 decimals first and computes the
percentage from the rounded loss, with decimal half-up rounding; that exact
order is what reproduces the published loss rows from the published
throughput columns.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import IoError

THROUGHPUT_COLUMNS = ("baseline_bps", "vpn_bps", "vpn_comp_bps")


@dataclass
class ComparisonTable:
    """Rows keyed by frame size; columns are per-scenario throughputs plus
    per-metric variants (delay, loss, IPDV)."""

    header_kind: str
    rows: dict[int, dict[str, float]]
    seeds: list[int] = field(default_factory=list)
    preset: str = ""

    def frame_sizes(self) -> list[int]:
        return sorted(self.rows)

    def columns(self) -> list[str]:
        # Sorted so renders are stable regardless of insertion or JSON
        # round-trip order; the name scheme groups per-scenario metrics.
        cols = {c for row in self.rows.values() for c in row}
        return sorted(cols)

    def to_dict(self) -> dict:
        return {
            "header_kind": self.header_kind,
            "seeds": self.seeds,
            "preset": self.preset,
            "rows": {str(k): self.rows[k] for k in self.frame_sizes()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComparisonTable":
        return cls(header_kind=data["header_kind"],
                   rows={int(k): dict(v) for k, v in data["rows"].items()},
                   seeds=list(data.get("seeds", [])),
                   preset=data.get("preset", ""))


@dataclass(frozen=True)
class LossRow:
    frame_bytes: int
    loss_mbps: Decimal
    loss_pct: Decimal


def _round2(value: Decimal) -> Decimal:
    return value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def _as_mbps(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    # Tables carry 3 decimals; quantize measured floats the same way.
    return Decimal(f"{value:.3f}")


def loss_table(table: ComparisonTable,
               baseline_col: str = "baseline_bps",
               vpn_col: str = "vpn_bps") -> list[LossRow]:
    """Per-row throughput loss in Mbps and percent (rounded loss first)."""
    out = []
    for frame_bytes in table.frame_sizes():
        row = table.rows[frame_bytes]
        base = _as_mbps(row[baseline_col] / 1e6
                        if not isinstance(row[baseline_col], Decimal)
                        else row[baseline_col])
        vpn = _as_mbps(row[vpn_col] / 1e6
                       if not isinstance(row[vpn_col], Decimal)
                       else row[vpn_col])
        loss_mbps = _round2(base - vpn)
        loss_pct = _round2(Decimal(100) * loss_mbps / base)
        out.append(LossRow(frame_bytes, loss_mbps, loss_pct))
    return out


def published_table(header_kind: str,
                    rows_mbps: dict[int, tuple[str, str, str]]) -> ComparisonTable:
    """Build a table from published Mbps values given as decimal strings."""
    rows = {}
    for frame_bytes, (base, vpn, comp) in rows_mbps.items():
        rows[frame_bytes] = {
            "baseline_bps": float(Decimal(base) * 1_000_000),
            "vpn_bps": float(Decimal(vpn) * 1_000_000),
            "vpn_comp_bps": float(Decimal(comp) * 1_000_000),
        }
    return ComparisonTable(header_kind=header_kind, rows=rows)


def _fmt3(bps: float) -> str:
    return f"{bps / 1e6:.3f}"


def render_csv(table: ComparisonTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = table.columns()
    writer.writerow(["frame_bytes"] + cols)
    for frame_bytes in table.frame_sizes():
        row = table.rows[frame_bytes]
        cells = []
        for col in cols:
            value = row.get(col, "")
            if col.endswith("_bps") and value != "":
                cells.append(_fmt3(value))
            elif value != "":
                cells.append(f"{value:.9g}")
            else:
                cells.append("")
        writer.writerow([frame_bytes] + cells)
    return buf.getvalue()


def render_json(table: ComparisonTable) -> str:
    return json.dumps(table.to_dict(), indent=2, sort_keys=True) + "\n"


def render_text(table: ComparisonTable) -> str:
    cols = ["frame_bytes"] + table.columns()
    rows = [[str(b)] + [
        (_fmt3(table.rows[b][c]) if c.endswith("_bps") and c in table.rows[b]
         else f"{table.rows[b][c]:.9g}" if c in table.rows[b] else "")
        for c in cols[1:]] for b in table.frame_sizes()]
    widths = [max(len(cols[i]), *(len(r[i]) for r in rows)) if rows
              else len(cols[i]) for i in range(len(cols))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    for r in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def render_plot_tsv(table: ComparisonTable) -> str:
    """x = frame size, one throughput series per scenario."""
    cols = [c for c in THROUGHPUT_COLUMNS if any(
        c in table.rows[b] for b in table.rows)]
    lines = ["\t".join(["frame_bytes"] + [c.removesuffix("_bps") for c in cols])]
    for frame_bytes in table.frame_sizes():
        row = table.rows[frame_bytes]
        lines.append("\t".join(
            [str(frame_bytes)] + [_fmt3(row[c]) if c in row else "" for c in cols]))
    return "\n".join(lines) + "\n"


def render_loss_csv(rows: list[LossRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame_bytes", "loss_mbps", "loss_pct"])
    for row in rows:
        writer.writerow([row.frame_bytes, f"{row.loss_mbps:.2f}",
                         f"{row.loss_pct:.2f}"])
    return buf.getvalue()


RENDERERS = {
    "csv": render_csv,
    "json": render_json,
    "text_table": render_text,
    "plot_tsv": render_plot_tsv,
}


def render(table: ComparisonTable, fmt: str) -> str:
    if fmt not in RENDERERS:
        raise IoError(f"unknown format '{fmt}'")
    return RENDERERS[fmt](table)


def emit(table: ComparisonTable, fmt: str, path) -> None:
    try:
        Path(path).write_text(render(table, fmt))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_table(path) -> ComparisonTable:
    try:
        return ComparisonTable.from_dict(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise IoError(str(exc)) from exc
