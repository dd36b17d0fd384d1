"""Sliding-window anti-replay check (RFC 4303-style 64-bit bitmap)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

WINDOW = 64
SEQ_MAX = 0xFFFFFFFF


class ReplayResult(Enum):
    ACCEPT = "accept"
    DUPLICATE = "duplicate"
    STALE = "stale"


@dataclass
class ReplayState:
    """Receive-direction window. highest_seq == 0 means nothing seen yet.

    Bit i of window is set iff (highest_seq - i) was accepted; bit 0 is
    therefore always set once any packet has been accepted.
    """

    highest_seq: int = 0
    window: int = 0

    def reset(self) -> None:
        self.highest_seq = 0
        self.window = 0


def check_and_update(state: ReplayState, seq: int) -> ReplayResult:
    """Accept, or reject as duplicate/stale, leaving state untouched on reject."""
    if seq <= 0 or seq > SEQ_MAX:
        return ReplayResult.STALE
    if seq > state.highest_seq:
        shift = seq - state.highest_seq
        state.window = ((state.window << shift) | 1) & ((1 << WINDOW) - 1)
        state.highest_seq = seq
        return ReplayResult.ACCEPT
    offset = state.highest_seq - seq
    if offset >= WINDOW:
        return ReplayResult.STALE
    if state.window & (1 << offset):
        return ReplayResult.DUPLICATE
    state.window |= 1 << offset
    return ReplayResult.ACCEPT
