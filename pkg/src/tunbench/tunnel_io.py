"""Live transport bindings for a tunnel endpoint.

UDP carries one wire packet per datagram; TCP carries length-prefixed wire
packets over the byte stream. The packet-I/O boundary defaults to the
in-process binding; an OS TUN binding is provided for Linux but is optional
and exercised by no automated test (it needs /dev/net/tun and root).
"""

from __future__ import annotations

import select
import socket
import struct
import threading
import time
from typing import Optional

from .errors import TunbenchError
from .tunnel import (
    Endpoint,
    InProcessIO,
    PingIndication,
    StreamDeframer,
    TickAction,
    TunnelConfig,
    frame_for_stream,
)
from .wire_codec import StaticKey

TUNSETIFF = 0x400454CA
IFF_TUN = 0x0001
IFF_NO_PI = 0x1000


class OsTunIO:
    """Linux /dev/net/tun binding of the packet-I/O boundary."""

    def __init__(self, dev_name: str):
        import fcntl  # Linux-only path

        self.fd = open("/dev/net/tun", "r+b", buffering=0)
        ifr = struct.pack("16sH22x", dev_name.encode(), IFF_TUN | IFF_NO_PI)
        fcntl.ioctl(self.fd, TUNSETIFF, ifr)

    def next_outgoing(self) -> Optional[bytes]:
        r, _, _ = select.select([self.fd], [], [], 0)
        return self.fd.read(2048) if r else None

    def deliver(self, payload: bytes) -> None:
        self.fd.write(payload)

    def close(self) -> None:
        self.fd.close()


class TunnelRunner:
    """Event loop for one live endpoint over real sockets.

    Serializes all endpoint events (wire in, payload out, tick) on a single
    thread, matching the endpoint's sequential state-machine contract.
    """

    def __init__(self, cfg: TunnelConfig, key: StaticKey, io=None,
                 local_port: Optional[int] = None):
        self.cfg = cfg
        self.key = key
        self.io = io if io is not None else InProcessIO()
        self.endpoint = Endpoint(cfg, key, now=time.monotonic())
        self._stop = threading.Event()
        self._local_port = cfg.port if local_port is None else local_port
        self._deframer = StreamDeframer()
        self._sock: Optional[socket.socket] = None
        self.pings_received = 0

    def stop(self) -> None:
        self._stop.set()

    def _open_socket(self) -> socket.socket:
        remote = (self.cfg.remote_addr, self.cfg.port)
        if self.cfg.proto == "udp":
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            sock.bind(("", self._local_port))
            sock.connect(remote)
            return sock
        # TCP: try to connect; fall back to listening for the peer.
        try:
            return socket.create_connection(remote, timeout=2.0)
        except OSError:
            srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            srv.bind(("", self._local_port))
            srv.listen(1)
            srv.settimeout(10.0)
            conn, _ = srv.accept()
            srv.close()
            return conn

    def _send_wire(self, wire: bytes) -> None:
        if self.cfg.proto == "udp":
            try:
                self._sock.send(wire)
            except (ConnectionRefusedError, BlockingIOError):
                pass  # peer not bound yet; datagrams are best-effort
        else:
            self._sock.sendall(frame_for_stream(wire))

    def run(self, duration_s: Optional[float] = None) -> None:
        self._sock = self._open_socket()
        self._sock.setblocking(False)
        deadline = None if duration_s is None else time.monotonic() + duration_s
        try:
            while not self._stop.is_set():
                now = time.monotonic()
                if deadline is not None and now >= deadline:
                    break
                for action in self.endpoint.tick(now):
                    if action is TickAction.SEND_PING:
                        self._send_wire(self.endpoint.make_ping(now=now))
                payload = self.io.next_outgoing()
                if payload is not None:
                    self._send_wire(self.endpoint.encapsulate(payload, now=now))
                r, _, _ = select.select([self._sock], [], [], 0.05)
                if not r:
                    continue
                try:
                    data = self._sock.recv(65536)
                except (BlockingIOError, ConnectionRefusedError,
                        ConnectionResetError):
                    continue
                if not data and self.cfg.proto == "tcp":
                    break
                wires = ([data] if self.cfg.proto == "udp"
                         else self._deframer.feed(data))
                for wire in wires:
                    try:
                        out = self.endpoint.decapsulate(wire, now=time.monotonic())
                    except TunbenchError:
                        continue  # drop bad packets, as a datagram tunnel must
                    if isinstance(out, PingIndication):
                        self.pings_received += 1
                    else:
                        self.io.deliver(out)
        finally:
            self._sock.close()
