"""Scenario files: a versioned JSON document describing one bench run
(link, endpoint costs, traffic, scenarios, seeds, search settings), plus
the result-directory writer. See README for the schema.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .errors import IoError, SpecError
from .link_sim import EndpointCosts, LinkParams, StageCosts, calibrate_link
from .metrics import (
    FillKind,
    FillSpec,
    HeaderKind,
    Scenario,
    SearchSettings,
    run_matrix,
)
from .presets import PAPER2011_COSTS, PAPER2011_LINK, default_tunnel_config
from .report import ComparisonTable, loss_table, render_csv, render_json, render_loss_csv
from .wire_codec import StaticKey, parse_key_file

SCHEMA_VERSION = 1

LINK_PRESETS = {"paper2011": PAPER2011_LINK}
COST_PRESETS = {"paper2011": PAPER2011_COSTS}


@dataclass(frozen=True)
class BenchScenario:
    name: str
    link_preset: Optional[str] = "paper2011"
    link: Optional[LinkParams] = None
    calibrate_targets: Optional[list[tuple[int, float]]] = None
    costs_preset: Optional[str] = "paper2011"
    costs: Optional[EndpointCosts] = None
    frame_sizes: list[int] = field(default_factory=lambda: [512, 1024, 1280, 1518])
    scenarios: list[Scenario] = field(
        default_factory=lambda: [Scenario.BASELINE, Scenario.TUNNEL,
                                 Scenario.TUNNEL_COMP])
    header_kinds: list[HeaderKind] = field(
        default_factory=lambda: [HeaderKind.UDP_LIKE, HeaderKind.TCP_LIKE])
    fill: FillSpec = field(default_factory=FillSpec)
    seeds: list[int] = field(default_factory=lambda: list(range(20)))
    search: SearchSettings = field(
        default_factory=lambda: SearchSettings(resolution_bps=50_000))
    load_fraction: float = 0.9
    metrics_duration_s: float = 2.0
    key_hex: str = "00" * 36

    def resolve_link(self) -> LinkParams:
        if self.link is not None:
            return self.link
        if self.calibrate_targets is not None:
            return calibrate_link(self.calibrate_targets)
        if self.link_preset in LINK_PRESETS:
            return LINK_PRESETS[self.link_preset]
        raise SpecError(f"unknown link preset '{self.link_preset}'")

    def resolve_costs(self) -> EndpointCosts:
        if self.costs is not None:
            return self.costs
        if self.costs_preset in COST_PRESETS:
            return COST_PRESETS[self.costs_preset]
        raise SpecError(f"unknown costs preset '{self.costs_preset}'")

    def preset_label(self) -> str:
        return self.link_preset or ("calibrated" if self.calibrate_targets
                                    else "inline")


def scenario_to_dict(sc: BenchScenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": sc.name,
        "link_preset": sc.link_preset,
        "link": asdict(sc.link) if sc.link else None,
        "calibrate_targets": sc.calibrate_targets,
        "costs_preset": sc.costs_preset,
        "costs": asdict(sc.costs) if sc.costs else None,
        "frame_sizes": sc.frame_sizes,
        "scenarios": [s.value for s in sc.scenarios],
        "header_kinds": [k.value for k in sc.header_kinds],
        "fill": {"kind": sc.fill.kind.value, "seed": sc.fill.seed},
        "seeds": sc.seeds,
        "search": asdict(sc.search),
        "load_fraction": sc.load_fraction,
        "metrics_duration_s": sc.metrics_duration_s,
        "key_hex": sc.key_hex,
    }


def scenario_from_dict(data: dict) -> BenchScenario:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SpecError(f"unsupported scenario schema_version {version!r}")
    link = LinkParams(**data["link"]) if data.get("link") else None
    costs = None
    if data.get("costs"):
        costs = EndpointCosts(
            crypto=StageCosts(**data["costs"]["crypto"]),
            compress=StageCosts(**data["costs"]["compress"]))
    targets = data.get("calibrate_targets")
    if targets is not None:
        targets = [(int(b), float(t)) for b, t in targets]
    fill = data.get("fill", {"kind": "zeros", "seed": 0})
    return BenchScenario(
        name=data["name"],
        link_preset=data.get("link_preset"),
        link=link,
        calibrate_targets=targets,
        costs_preset=data.get("costs_preset"),
        costs=costs,
        frame_sizes=[int(b) for b in data["frame_sizes"]],
        scenarios=[Scenario(s) for s in data["scenarios"]],
        header_kinds=[HeaderKind(k) for k in data["header_kinds"]],
        fill=FillSpec(FillKind(fill["kind"]), int(fill.get("seed", 0))),
        seeds=[int(s) for s in data["seeds"]],
        search=SearchSettings(**data["search"]),
        load_fraction=float(data.get("load_fraction", 0.9)),
        metrics_duration_s=float(data.get("metrics_duration_s", 2.0)),
        key_hex=data.get("key_hex", "00" * 36),
    )


def load_scenario(path) -> BenchScenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return scenario_from_dict(json.loads(text))


def save_scenario(sc: BenchScenario, path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n")


def run_scenario(sc: BenchScenario) -> dict[str, ComparisonTable]:
    key = parse_key_file(sc.key_hex)
    tables = run_matrix(
        frame_sizes=sc.frame_sizes,
        scenarios=sc.scenarios,
        link=sc.resolve_link(),
        search=sc.search,
        key=key,
        cfg=default_tunnel_config(),
        costs=sc.resolve_costs(),
        header_kinds=tuple(sc.header_kinds),
        fill=sc.fill,
        seeds=tuple(sc.seeds),
        load_fraction=sc.load_fraction,
        metrics_duration_s=sc.metrics_duration_s,
        preset_name=sc.preset_label(),
    )
    return tables


def persist_results(sc: BenchScenario, tables: dict[str, ComparisonTable],
                    out_dir) -> list[str]:
    """Write one csv + one json per header kind, loss tables where both
    tunnel columns exist, and a manifest. Output is deterministic."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for kind in sorted(tables):
            table = tables[kind]
            (out / f"{kind}.csv").write_text(render_csv(table))
            (out / f"{kind}.json").write_text(render_json(table))
            written += [f"{kind}.csv", f"{kind}.json"]
            cols = table.columns()
            if "baseline_bps" in cols and "vpn_bps" in cols:
                (out / f"loss_{kind}.csv").write_text(
                    render_loss_csv(loss_table(table)))
                written.append(f"loss_{kind}.csv")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "scenario": scenario_to_dict(sc),
            "files": sorted(written),
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return sorted(written) + ["manifest.json"]
