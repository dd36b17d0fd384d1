"""Deterministic discrete-event model of the measurement channel.

The laptop -> AP -> laptop path is modeled as a single drop-tail FIFO
server: fixed per-frame overhead (MAC/PHY contention, ACKs, AP forwarding)
plus serialization time at the fitted capacity, with optional bounded
uniform jitter. Endpoint CPU cost (crypto/compression) is modeled as
additional pipeline stages with their own fixed + per-byte service times.
All clocks are virtual seconds.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import CalibrationError


@dataclass(frozen=True)
class LinkParams:
    capacity_bps: float
    fixed_overhead_s: float = 0.0
    jitter_s: float = 0.0
    prop_delay_s: float = 0.0
    queue_cap: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.capacity_bps <= 0:
            raise ValueError("capacity_bps must be positive")
        if self.queue_cap < 1:
            raise ValueError("queue_cap must be >= 1")
        # Smallest frame is 64 bytes; service time must stay positive.
        if self.jitter_s >= self.fixed_overhead_s + 8 * 64 / self.capacity_bps:
            raise ValueError("jitter_s too large: service time could go negative")


@dataclass(frozen=True)
class StageCosts:
    """Per-frame processing cost of one endpoint pipeline stage."""

    fixed_s: float
    per_byte_s: float

    def service(self, nbytes: int) -> float:
        return self.fixed_s + self.per_byte_s * nbytes


@dataclass(frozen=True)
class EndpointCosts:
    """Costs of the tunnel pipeline stages (one stage = one pipelined server)."""

    crypto: StageCosts
    compress: StageCosts


class EventKind(Enum):
    FRAME_ARRIVAL = "frame_arrival"
    FRAME_DEPARTURE = "frame_departure"
    ENDPOINT_TICK = "endpoint_tick"


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: EventKind
    frame_id: int


def service_time(params: LinkParams, frame_bytes: int,
                 jitter_draw: float = 0.0) -> float:
    """fixed overhead + serialization + jitter_draw * jitter half-width."""
    if frame_bytes < 1:
        raise ValueError("frame_bytes must be >= 1")
    return (params.fixed_overhead_s
            + 8 * frame_bytes / params.capacity_bps
            + jitter_draw * params.jitter_s)


class DropTailServer:
    """Single FIFO server with a finite system (drop-tail) capacity.

    Frames are offered in nondecreasing arrival-time order; completion times
    follow the standard Lindley recursion, so no event heap is needed.
    """

    def __init__(self, queue_cap: int):
        self.queue_cap = queue_cap
        self._completions: deque[float] = deque()
        self._last_completion = 0.0

    def occupancy(self, now: float) -> int:
        while self._completions and self._completions[0] <= now:
            self._completions.popleft()
        return len(self._completions)

    def process(self, arrival: float, service: float) -> Optional[float]:
        """Completion time, or None if the frame was dropped."""
        if self.occupancy(arrival) >= self.queue_cap:
            return None
        start = max(arrival, self._last_completion)
        completion = start + service
        self._completions.append(completion)
        self._last_completion = completion
        return completion


# Frame-to-frame correlation of the jitter draws. 802.11 contention and
# interference come in bursts, so per-frame service jitter is not
# independent; an AR(1) latent mapped to a uniform marginal keeps the
# bounded support while reproducing the delay-variation growth with load.
JITTER_RHO = 0.95


class Channel:
    """The simulated link: drop-tail server + seeded jitter + propagation."""

    def __init__(self, params: LinkParams, log: Optional[list] = None):
        self.params = params
        self._server = DropTailServer(params.queue_cap)
        self._rng = random.Random(params.seed)
        self._latent = self._rng.gauss(0.0, 1.0)
        self._log = log
        self._next_frame_id = 0

    def _jitter_draw(self) -> float:
        """Correlated draw with an exactly uniform(-1, 1) marginal."""
        self._latent = (JITTER_RHO * self._latent
                        + math.sqrt(1.0 - JITTER_RHO ** 2)
                        * self._rng.gauss(0.0, 1.0))
        return math.erf(self._latent / math.sqrt(2.0))

    def transmit(self, frame_bytes: int, now: float) -> Optional[float]:
        """Delivery time at the far side, or None if dropped (drop-tail)."""
        frame_id = self._next_frame_id
        self._next_frame_id += 1
        if self._log is not None:
            self._log.append(SimEvent(now, EventKind.FRAME_ARRIVAL, frame_id))
        draw = self._jitter_draw() if self.params.jitter_s else 0.0
        completion = self._server.process(
            now, service_time(self.params, frame_bytes, draw))
        if completion is None:
            return None
        if self._log is not None:
            self._log.append(
                SimEvent(completion, EventKind.FRAME_DEPARTURE, frame_id))
        return completion + self.params.prop_delay_s


def calibrate_link(targets: list[tuple[int, float]],
                   queue_cap: int = 50) -> LinkParams:
    """Least-squares fit of (fixed_overhead_s, capacity_bps) to measured
    per-frame times 8*bytes/throughput = overhead + 8*bytes/capacity."""
    sizes = {b for b, _ in targets}
    if len(sizes) < 2:
        raise CalibrationError("need at least 2 targets with distinct frame sizes")
    xs = [8.0 * b for b, _ in targets]
    ts = [8.0 * b / tput for b, tput in targets]
    n = len(targets)
    xbar = sum(xs) / n
    tbar = sum(ts) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxt = sum((x - xbar) * (t - tbar) for x, t in zip(xs, ts))
    slope = sxt / sxx
    overhead = tbar - slope * xbar
    if slope <= 0:
        raise CalibrationError("fitted capacity is not positive")
    if overhead < 0:
        raise CalibrationError("fitted overhead is negative")
    return LinkParams(capacity_bps=1.0 / slope, fixed_overhead_s=overhead,
                      jitter_s=0.0, prop_delay_s=0.0, queue_cap=queue_cap)
