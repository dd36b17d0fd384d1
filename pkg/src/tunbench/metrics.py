"""Traffic generation, trial execution, and the RFC metric engines:
2544-style throughput search, one-way delay (2679), loss (2680), and
IPDV (3393), plus the matrix runner producing paper-style tables.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .errors import EmptyError, SearchError, SpecError, TunbenchError
from .link_sim import Channel, DropTailServer, EndpointCosts, LinkParams
from .tunnel import Endpoint, TunnelConfig
from .wire_codec import TAG_LEN, IV_LEN, StaticKey

# Ethernet header (14) + FCS (4); frame_bytes covers the full layer-2 frame.
L2_OVERHEAD = 18
MIN_FRAME = 64
MAX_FRAME = 1518
LINE_RATE_BPS = 54e6  # 802.11g nominal


class HeaderKind(Enum):
    UDP_LIKE = "udp_like"
    TCP_LIKE = "tcp_like"


class FillKind(Enum):
    ZEROS = "zeros"
    INCREMENT = "increment"
    RANDOM = "random"


@dataclass(frozen=True)
class FillSpec:
    kind: FillKind = FillKind.ZEROS
    seed: int = 0


class Scenario(Enum):
    BASELINE = "baseline"
    TUNNEL = "tunnel"
    TUNNEL_COMP = "tunnel_comp"


@dataclass(frozen=True)
class TrafficSpec:
    header_kind: HeaderKind
    frame_bytes: int
    offered_bps: float
    duration_s: float
    fill: FillSpec = field(default_factory=FillSpec)

    def __post_init__(self):
        if not MIN_FRAME <= self.frame_bytes <= MAX_FRAME:
            raise SpecError(f"frame_bytes outside {MIN_FRAME}..{MAX_FRAME}")
        if self.offered_bps <= 0:
            raise SpecError("offered_bps must be positive")
        if self.duration_s <= 0:
            raise SpecError("duration_s must be positive")


@dataclass
class TrialResult:
    tx_count: int
    rx_count: int
    samples: list[tuple[int, float, float]]  # (seq, tx_ts, rx_ts)
    dropped_seqs: list[int]


@dataclass(frozen=True)
class DelayStats:
    min_s: float
    avg_s: float
    max_s: float
    p99_s: float


@dataclass(frozen=True)
class IpdvStats:
    mean_abs_s: float
    p99_s: float


@dataclass(frozen=True)
class MetricsReport:
    throughput_bps: float
    delay: DelayStats
    loss_ratio: float
    ipdv: IpdvStats


def _stamp_headers(buf: bytearray, kind: HeaderKind, seq: int) -> None:
    """Plausible IP + UDP/TCP header image at the start of the payload."""
    proto = 17 if kind is HeaderKind.UDP_LIKE else 6
    buf[0:2] = b"\x45\x00"
    buf[2:4] = len(buf).to_bytes(2, "big")
    buf[4:6] = (seq & 0xFFFF).to_bytes(2, "big")
    buf[6:8] = b"\x40\x00"
    buf[8] = 64
    buf[9] = proto
    buf[12:16] = bytes([10, 0, 0, 1])
    buf[16:20] = bytes([10, 0, 0, 2])
    if kind is HeaderKind.UDP_LIKE:
        buf[20:22] = (5001).to_bytes(2, "big")
        buf[22:24] = (5002).to_bytes(2, "big")
        buf[24:26] = (len(buf) - 20).to_bytes(2, "big")
    else:
        buf[20:22] = (5001).to_bytes(2, "big")
        buf[22:24] = (5002).to_bytes(2, "big")
        buf[24:28] = (seq & 0xFFFFFFFF).to_bytes(4, "big")
        buf[32] = 0x50
        buf[34:36] = (65535).to_bytes(2, "big")


@dataclass(frozen=True)
class Frame:
    seq: int
    tx_ts: float
    payload: bytes


class FrameSchedule:
    """Constant-bit-rate schedule; payloads are materialized on demand."""

    def __init__(self, spec: TrafficSpec):
        self.spec = spec
        self.gap_s = 8 * spec.frame_bytes / spec.offered_bps
        self.count = int(spec.duration_s * spec.offered_bps
                         / (8 * spec.frame_bytes))
        self.payload_len = spec.frame_bytes - L2_OVERHEAD

    def payload(self, seq: int) -> bytes:
        spec = self.spec
        n = self.payload_len
        if spec.fill.kind is FillKind.ZEROS:
            buf = bytearray(n)
        elif spec.fill.kind is FillKind.INCREMENT:
            buf = bytearray(i & 0xFF for i in range(n))
        else:
            buf = bytearray(
                random.Random((spec.fill.seed << 32) ^ seq).randbytes(n))
        _stamp_headers(buf, spec.header_kind, seq)
        return bytes(buf)

    def __iter__(self):
        for i in range(self.count):
            yield Frame(i + 1, i * self.gap_s, self.payload(i + 1))


def generate_stream(spec: TrafficSpec) -> FrameSchedule:
    return FrameSchedule(spec)


def _bench_config(cfg: TunnelConfig, compression: bool) -> TunnelConfig:
    return replace(cfg, compression=compression)


def run_trial(scenario: Scenario, link: LinkParams, spec: TrafficSpec,
              key: Optional[StaticKey] = None,
              cfg: Optional[TunnelConfig] = None,
              costs: Optional[EndpointCosts] = None,
              seed: int = 0,
              log: Optional[list] = None) -> TrialResult:
    """One virtual-time trial. Tunnel scenarios push every frame's layer-3
    payload through the real encapsulate/decapsulate pipeline; timestamps
    bracket the whole path, so CPU-stage delay and wire-size change are both
    measured."""
    schedule = generate_stream(spec)
    channel = Channel(replace(link, seed=seed ^ link.seed), log=log)

    if scenario is Scenario.BASELINE:
        samples, dropped = [], []
        for frame in schedule:
            rx = channel.transmit(spec.frame_bytes, frame.tx_ts)
            if rx is None:
                dropped.append(frame.seq)
            else:
                samples.append((frame.seq, frame.tx_ts, rx))
        return TrialResult(schedule.count, len(samples), samples, dropped)

    if key is None or cfg is None or costs is None:
        raise SpecError("tunnel scenarios require key, cfg, and costs")
    compression = scenario is Scenario.TUNNEL_COMP
    cfg = _bench_config(cfg, compression)
    ep_a = Endpoint(cfg, key)
    ep_b = Endpoint(cfg, key)
    iv_rng = random.Random(seed ^ 0x1F2E3D4C)
    cap = link.queue_cap
    comp_a = DropTailServer(cap)
    enc_a = DropTailServer(cap)
    dec_b = DropTailServer(cap)
    decomp_b = DropTailServer(cap)

    samples, dropped = [], []
    for frame in schedule:
        t = frame.tx_ts
        if compression:
            t = comp_a.process(t, costs.compress.service(len(frame.payload)))
            if t is None:
                dropped.append(frame.seq)
                continue
        # Drop decision precedes the (costly) real crypto work.
        if enc_a.occupancy(t) >= cap:
            dropped.append(frame.seq)
            continue
        wire = ep_a.encapsulate(frame.payload, iv=iv_rng.randbytes(IV_LEN),
                                now=t)
        ct_len = len(wire) - TAG_LEN - IV_LEN
        t = enc_a.process(t, costs.crypto.service(ct_len))
        t = channel.transmit(len(wire) + L2_OVERHEAD, t)
        if t is None:
            dropped.append(frame.seq)
            continue
        if dec_b.occupancy(t) >= cap:
            dropped.append(frame.seq)
            continue
        t = dec_b.process(t, costs.crypto.service(ct_len))
        out = ep_b.decapsulate(wire, now=t)
        if compression:
            t = decomp_b.process(t, costs.compress.service(len(out)))
            if t is None:
                dropped.append(frame.seq)
                continue
        if out != frame.payload:
            raise TunbenchError(f"payload corrupted in transit (seq {frame.seq})")
        samples.append((frame.seq, frame.tx_ts, t))
    return TrialResult(schedule.count, len(samples), samples, dropped)


@dataclass(frozen=True)
class SearchSettings:
    resolution_bps: float
    loss_threshold: float = 0.0
    trial_duration_s: float = 2.0
    line_rate_bps: float = LINE_RATE_BPS

    def __post_init__(self):
        if self.resolution_bps <= 0:
            raise SpecError("resolution_bps must be positive")


def rfc2544_throughput(scenario: Scenario, link: LinkParams,
                       spec_template: TrafficSpec, search: SearchSettings,
                       key: Optional[StaticKey] = None,
                       cfg: Optional[TunnelConfig] = None,
                       costs: Optional[EndpointCosts] = None,
                       seed: int = 0) -> float:
    """Binary search for the highest offered rate whose trial loss stays at
    or below the threshold, on a grid of resolution_bps steps."""

    def passes(k: int) -> bool:
        spec = replace(spec_template, offered_bps=k * search.resolution_bps,
                       duration_s=search.trial_duration_s)
        result = run_trial(scenario, link, spec, key=key, cfg=cfg,
                           costs=costs, seed=seed)
        if result.tx_count == 0:
            return True
        return loss_ratio(result) <= search.loss_threshold

    k_max = int(search.line_rate_bps // search.resolution_bps)
    if k_max < 1 or not passes(1):
        raise SearchError("minimum probe rate already exceeds the threshold")
    if passes(k_max):
        return k_max * search.resolution_bps
    lo, hi = 1, k_max  # lo passes, hi fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo * search.resolution_bps


def _nearest_rank(sorted_vals: list[float], pct: float) -> float:
    idx = max(0, math.ceil(pct / 100.0 * len(sorted_vals)) - 1)
    return sorted_vals[idx]


def delay_stats(result: TrialResult) -> DelayStats:
    """One-way delay over delivered frames only (lost frames have no delay)."""
    if result.rx_count < 1:
        raise EmptyError("no frame delivered")
    delays = sorted(rx - tx for _, tx, rx in result.samples)
    return DelayStats(min_s=delays[0],
                      avg_s=sum(delays) / len(delays),
                      max_s=delays[-1],
                      p99_s=_nearest_rank(delays, 99))


def loss_ratio(result: TrialResult) -> float:
    if result.tx_count < 1:
        raise EmptyError("no frame transmitted")
    return (result.tx_count - result.rx_count) / result.tx_count


def ipdv_stats(result: TrialResult) -> IpdvStats:
    """Delay differences between consecutive delivered frames in sent order."""
    if result.rx_count < 2:
        raise EmptyError("fewer than 2 frames delivered")
    ordered = sorted(result.samples)
    deltas = [abs((r2 - t2) - (r1 - t1))
              for (_, t1, r1), (_, t2, r2) in zip(ordered, ordered[1:])]
    deltas.sort()
    return IpdvStats(mean_abs_s=sum(deltas) / len(deltas),
                     p99_s=_nearest_rank(deltas, 99))


def compute_report(result: TrialResult, throughput_bps: float) -> MetricsReport:
    return MetricsReport(throughput_bps=throughput_bps,
                         delay=delay_stats(result),
                         loss_ratio=loss_ratio(result),
                         ipdv=ipdv_stats(result))


SCENARIO_COLUMN = {
    Scenario.BASELINE: "baseline",
    Scenario.TUNNEL: "vpn",
    Scenario.TUNNEL_COMP: "vpn_comp",
}


def run_matrix(frame_sizes: list[int], scenarios: list[Scenario],
               link: LinkParams, search: SearchSettings,
               key: Optional[StaticKey] = None,
               cfg: Optional[TunnelConfig] = None,
               costs: Optional[EndpointCosts] = None,
               header_kinds: tuple[HeaderKind, ...] = (HeaderKind.UDP_LIKE,),
               fill: FillSpec = FillSpec(),
               seeds: tuple[int, ...] = tuple(range(20)),
               load_fraction: float = 0.9,
               metrics_duration_s: float = 2.0,
               preset_name: str = ""):
    """Throughput search plus delay/loss/IPDV at load_fraction of the found
    rate, for every (frame size, scenario, header kind) cell, averaged over
    seeds. Returns one ComparisonTable per header kind."""
    from .report import ComparisonTable  # report does not import metrics

    tables = {}
    for kind in header_kinds:
        rows: dict[int, dict[str, float]] = {b: {} for b in sorted(frame_sizes)}
        for frame_bytes in sorted(frame_sizes):
            template = TrafficSpec(header_kind=kind, frame_bytes=frame_bytes,
                                   offered_bps=1e6, duration_s=1.0, fill=fill)
            for scenario in scenarios:
                col = SCENARIO_COLUMN[scenario]
                tputs, reports = [], []
                for seed in seeds:
                    tput = rfc2544_throughput(
                        scenario, link, template, search,
                        key=key, cfg=cfg, costs=costs, seed=seed)
                    spec = replace(template,
                                   offered_bps=load_fraction * tput,
                                   duration_s=metrics_duration_s)
                    trial = run_trial(scenario, link, spec, key=key, cfg=cfg,
                                      costs=costs, seed=seed)
                    tputs.append(tput)
                    reports.append(compute_report(trial, tput))
                n = len(seeds)
                row = rows[frame_bytes]
                row[f"{col}_bps"] = sum(tputs) / n
                row[f"{col}_delay_avg_s"] = sum(
                    r.delay.avg_s for r in reports) / n
                row[f"{col}_delay_p99_s"] = sum(
                    r.delay.p99_s for r in reports) / n
                row[f"{col}_loss_ratio"] = sum(
                    r.loss_ratio for r in reports) / n
                row[f"{col}_ipdv_mean_abs_s"] = sum(
                    r.ipdv.mean_abs_s for r in reports) / n
        tables[kind.value] = ComparisonTable(
            header_kind=kind.value, rows=rows,
            seeds=list(seeds), preset=preset_name)
    return tables
