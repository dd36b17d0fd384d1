"""One VPN endpoint: config parsing, the encapsulate/decapsulate pipeline,
keepalive state machine, and the pluggable packet-I/O boundary that stands
in for the TUN virtual interface.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from . import wire_codec
from .compressor import compress_body, decompress_body
from .errors import ConfigError, ReplayError, SeqExhausted
from .replay_guard import SEQ_MAX, ReplayResult, ReplayState, check_and_update
from .wire_codec import (
    PING_BODY,
    CompFlag,
    MsgType,
    PlainRecord,
    StaticKey,
    open_packet,
    seal,
)

MTU = 1500
SUPPORTED_CIPHERS = ("AES-128-CBC",)

MANDATORY_DIRECTIVES = ("port", "proto", "remote", "secret")


@dataclass(frozen=True)
class TunnelConfig:
    port: int
    proto: str                    # "udp" or "tcp"
    remote_addr: str
    secret_path: str
    dev_name: str = "tun0"
    vpn_local: str = ""
    vpn_remote: str = ""
    cipher_id: str = "AES-128-CBC"
    compression: bool = False
    keepalive_ping_s: float = 0.0
    keepalive_timeout_s: float = 0.0
    persist_tun: bool = False

    @property
    def keepalive(self) -> bool:
        return self.keepalive_ping_s > 0


def parse_config(text: str) -> TunnelConfig:
    """Parse a Table-4-style config: one directive per line, '#' comments,
    case-insensitive names, whitespace-separated tokens."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        name = tokens[0].lower()
        args = tokens[1:]

        def need(n):
            if len(args) != n:
                raise ConfigError(
                    f"directive '{name}' takes {n} argument(s)", lineno)

        if name == "port":
            need(1)
            try:
                port = int(args[0])
            except ValueError:
                raise ConfigError("port must be an integer", lineno) from None
            if not 1 <= port <= 65535:
                raise ConfigError("port out of range 1..65535", lineno)
            values["port"] = port
        elif name == "proto":
            need(1)
            proto = args[0].lower()
            if proto not in ("udp", "tcp"):
                raise ConfigError(f"unsupported proto '{args[0]}'", lineno)
            values["proto"] = proto
        elif name == "dev":
            need(1)
            values["dev_name"] = args[0]
        elif name == "remote":
            need(1)
            values["remote_addr"] = args[0]
        elif name == "ifconfig":
            need(2)
            values["vpn_local"], values["vpn_remote"] = args
        elif name == "cipher":
            need(1)
            if args[0] not in SUPPORTED_CIPHERS:
                raise ConfigError(f"unsupported cipher '{args[0]}'", lineno)
            values["cipher_id"] = args[0]
        elif name == "secret":
            need(1)
            values["secret_path"] = args[0]
        elif name == "comp-lzo":
            need(0)
            values["compression"] = True
        elif name == "persist-tun":
            need(0)
            values["persist_tun"] = True
        elif name == "keepalive":
            need(2)
            try:
                ping, timeout = float(args[0]), float(args[1])
            except ValueError:
                raise ConfigError("keepalive takes two numbers", lineno) from None
            if not timeout > ping > 0:
                raise ConfigError(
                    "keepalive requires timeout > ping > 0", lineno)
            values["keepalive_ping_s"] = ping
            values["keepalive_timeout_s"] = timeout
        else:
            raise ConfigError(f"unknown directive '{tokens[0]}'", lineno)

    missing = [d for d in MANDATORY_DIRECTIVES
               if {"port": "port", "proto": "proto", "remote": "remote_addr",
                   "secret": "secret_path"}[d] not in values]
    if missing:
        raise ConfigError(f"missing mandatory directive(s): {', '.join(missing)}")
    return TunnelConfig(**values)


class PeerStatus(Enum):
    ALIVE = "alive"
    TIMED_OUT = "timed_out"


class TickAction(Enum):
    SEND_PING = "send_ping"
    DECLARE_TIMEOUT = "declare_timeout"


class PingIndication:
    """Returned by decapsulate when an authenticated keepalive ping arrived."""

    __slots__ = ()

    def __repr__(self):
        return "PingIndication()"


PING = PingIndication()


@dataclass
class EndpointState:
    send_seq: int = 1
    replay: ReplayState = field(default_factory=ReplayState)
    last_send_ts: float = 0.0
    last_recv_ts: float = 0.0
    peer_status: PeerStatus = PeerStatus.ALIVE


class Endpoint:
    """Sequential tunnel state machine; process one event at a time."""

    def __init__(self, cfg: TunnelConfig, key: StaticKey, now: float = 0.0):
        self.cfg = cfg
        self.key = key
        self.state = EndpointState(last_send_ts=now, last_recv_ts=now)

    def _next_seq(self) -> int:
        seq = self.state.send_seq
        if seq >= SEQ_MAX:
            raise SeqExhausted("outgoing sequence space exhausted")
        self.state.send_seq = seq + 1
        return seq

    def encapsulate(self, payload: bytes, iv: Optional[bytes] = None,
                    now: float = 0.0) -> bytes:
        """compress (if configured) -> seal; returns the wire bytes."""
        if len(payload) > MTU:
            raise wire_codec.FormatError(f"payload exceeds MTU {MTU}")
        if self.cfg.compression:
            cb = compress_body(payload)
            flag, body = cb.comp_flag, cb.data
        else:
            flag, body = CompFlag.RAW, payload
        record = PlainRecord(MsgType.DATA, self._next_seq(), flag, body)
        wire = seal(record, self.key, iv if iv is not None else os.urandom(16))
        self.state.last_send_ts = now
        return wire.to_bytes()

    def make_ping(self, iv: Optional[bytes] = None, now: float = 0.0) -> bytes:
        record = PlainRecord(MsgType.PING, self._next_seq(),
                             CompFlag.RAW, PING_BODY)
        wire = seal(record, self.key, iv if iv is not None else os.urandom(16))
        self.state.last_send_ts = now
        return wire.to_bytes()

    def decapsulate(self, wire: bytes,
                    now: float = 0.0) -> Union[bytes, PingIndication]:
        """open -> replay check -> decompress. Only packets that pass both
        authentication and the replay window refresh liveness."""
        record = open_packet(wire, self.key)
        result = check_and_update(self.state.replay, record.seq)
        if result is not ReplayResult.ACCEPT:
            raise ReplayError(result.value)
        self.state.last_recv_ts = now
        if record.msg_type is MsgType.PING:
            return PING
        return decompress_body(record.comp_flag, record.body, cap=MTU)

    def tick(self, now: float) -> list[TickAction]:
        """Keepalive decisions; the caller sends the ping via make_ping."""
        actions = []
        if not self.cfg.keepalive:
            return actions
        if now - self.state.last_send_ts >= self.cfg.keepalive_ping_s:
            actions.append(TickAction.SEND_PING)
        if now - self.state.last_recv_ts > self.cfg.keepalive_timeout_s:
            actions.append(TickAction.DECLARE_TIMEOUT)
            self.state.peer_status = PeerStatus.TIMED_OUT
            # Fresh session on timeout: rekeying is out of scope, so the
            # sequence and replay state restart from scratch.
            self.state.send_seq = 1
            self.state.replay.reset()
            self.state.last_recv_ts = now
        return actions


class InProcessIO:
    """In-process binding of the packet-I/O boundary (TUN stand-in).

    Applications inject layer-3 payloads for the tunnel to send, and read
    payloads the tunnel delivered.
    """

    def __init__(self):
        self._to_tunnel = deque()
        self._from_tunnel = deque()

    def inject(self, payload: bytes) -> None:
        self._to_tunnel.append(payload)

    def next_outgoing(self) -> Optional[bytes]:
        return self._to_tunnel.popleft() if self._to_tunnel else None

    def deliver(self, payload: bytes) -> None:
        self._from_tunnel.append(payload)

    def delivered(self) -> list[bytes]:
        out = list(self._from_tunnel)
        self._from_tunnel.clear()
        return out


def frame_for_stream(wire: bytes) -> bytes:
    """TCP transport framing: 2-byte big-endian length prefix per packet."""
    if len(wire) > 0xFFFF:
        raise wire_codec.FormatError("wire packet too large for stream framing")
    return len(wire).to_bytes(2, "big") + wire


class StreamDeframer:
    """Incremental inverse of frame_for_stream over a TCP byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        self._buf.extend(data)
        packets = []
        while True:
            if len(self._buf) < 2:
                break
            n = int.from_bytes(self._buf[:2], "big")
            if len(self._buf) < 2 + n:
                break
            packets.append(bytes(self._buf[2:2 + n]))
            del self._buf[:2 + n]
        return packets
