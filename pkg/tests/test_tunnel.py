import threading
import time

import pytest

from tunbench.errors import (
    AuthError,
    ConfigError,
    FormatError,
    ReplayError,
    SeqExhausted,
)
from tunbench.tunnel import (
    MTU,
    Endpoint,
    InProcessIO,
    PeerStatus,
    PingIndication,
    StreamDeframer,
    TickAction,
    TunnelConfig,
    frame_for_stream,
    parse_config,
)
from tunbench.tunnel_io import TunnelRunner
from tunbench.wire_codec import StaticKey

KEY = StaticKey(b"\x01" * 16, b"\x02" * 20)
IV = bytes(16)

ENDPOINT_CONF = """\
# tunnel endpoint configuration
dev tun0
ifconfig 20.20.20.1 20.20.20.2
remote 192.168.1.102
port 5002
proto udp
cipher AES-128-CBC
secret static.key
comp-lzo
keepalive 5 20
persist-tun
"""


def make_cfg(**kw):
    defaults = dict(port=5002, proto="udp", remote_addr="192.168.1.102",
                    secret_path="static.key")
    defaults.update(kw)
    return TunnelConfig(**defaults)


class TestParseConfig:
    def test_full_endpoint_file(self):
        cfg = parse_config(ENDPOINT_CONF)
        assert cfg.dev_name == "tun0"
        assert cfg.vpn_local == "20.20.20.1"
        assert cfg.vpn_remote == "20.20.20.2"
        assert cfg.remote_addr == "192.168.1.102"
        assert cfg.port == 5002
        assert cfg.proto == "udp"
        assert cfg.cipher_id == "AES-128-CBC"
        assert cfg.secret_path == "static.key"
        assert cfg.compression is True
        assert cfg.keepalive_ping_s == 5
        assert cfg.keepalive_timeout_s == 20
        assert cfg.persist_tun is True

    def test_case_insensitive_directives(self):
        cfg = parse_config("PORT 1194\nProto TCP\nRemote h\nSecret k\n")
        assert (cfg.port, cfg.proto) == (1194, "tcp")

    def test_missing_mandatory(self):
        with pytest.raises(ConfigError, match="proto"):
            parse_config("port 1194\nremote h\nsecret k\n")

    def test_unknown_directive_reports_line(self):
        with pytest.raises(ConfigError) as ei:
            parse_config("port 1194\nbogus x\n")
        assert ei.value.line == 2

    def test_port_range(self):
        with pytest.raises(ConfigError):
            parse_config("port 70000\nproto udp\nremote h\nsecret k\n")

    def test_unsupported_cipher(self):
        with pytest.raises(ConfigError, match="cipher"):
            parse_config("cipher DES-CBC\nport 1\nproto udp\nremote h\nsecret k\n")

    def test_keepalive_must_order(self):
        for bad in ("keepalive 20 5", "keepalive 0 20", "keepalive 5 5"):
            with pytest.raises(ConfigError):
                parse_config(f"{bad}\nport 1\nproto udp\nremote h\nsecret k\n")

    def test_wrong_arity(self):
        with pytest.raises(ConfigError):
            parse_config("ifconfig 1.1.1.1\nport 1\nproto udp\nremote h\nsecret k\n")


class TestEncapDecap:
    def test_roundtrip_plain(self):
        a = Endpoint(make_cfg(), KEY)
        b = Endpoint(make_cfg(), KEY)
        payload = b"\x45" + bytes(99)
        assert b.decapsulate(a.encapsulate(payload, iv=IV)) == payload

    def test_roundtrip_compressed(self):
        a = Endpoint(make_cfg(compression=True), KEY)
        b = Endpoint(make_cfg(compression=True), KEY)
        payload = bytes(1400)
        wire = a.encapsulate(payload, iv=IV)
        assert len(wire) < 120  # zero payload compresses hard
        assert b.decapsulate(wire) == payload

    def test_wire_size_uncompressed(self):
        a = Endpoint(make_cfg(), KEY)
        # 1500-byte payload: 6-byte record header + padding -> 1520-byte
        # ciphertext, plus 20-byte tag and 16-byte IV.
        assert len(a.encapsulate(bytes(1500), iv=IV)) == 1556

    def test_mtu_enforced(self):
        a = Endpoint(make_cfg(), KEY)
        with pytest.raises(FormatError):
            a.encapsulate(bytes(MTU + 1), iv=IV)

    def test_seq_increments(self):
        a = Endpoint(make_cfg(), KEY)
        a.encapsulate(b"x", iv=IV)
        a.encapsulate(b"x", iv=IV)
        assert a.state.send_seq == 3

    def test_replayed_wire_rejected(self):
        a = Endpoint(make_cfg(), KEY)
        b = Endpoint(make_cfg(), KEY)
        wire = a.encapsulate(b"x", iv=IV)
        b.decapsulate(wire)
        with pytest.raises(ReplayError):
            b.decapsulate(wire)

    def test_wrong_key_rejected(self):
        a = Endpoint(make_cfg(), KEY)
        b = Endpoint(make_cfg(), StaticKey(bytes(16), bytes(20)))
        with pytest.raises(AuthError):
            b.decapsulate(a.encapsulate(b"x", iv=IV))

    def test_ping_roundtrip(self):
        a = Endpoint(make_cfg(), KEY)
        b = Endpoint(make_cfg(), KEY)
        assert isinstance(b.decapsulate(a.make_ping(iv=IV)), PingIndication)

    def test_seq_exhaustion(self):
        a = Endpoint(make_cfg(), KEY)
        a.state.send_seq = 0xFFFFFFFF
        with pytest.raises(SeqExhausted):
            a.encapsulate(b"x", iv=IV)


class TestKeepalive:
    def make_pair(self):
        cfg = make_cfg(keepalive_ping_s=5, keepalive_timeout_s=20)
        return Endpoint(cfg, KEY, now=0.0)

    def test_single_ping_after_idle(self):
        ep = self.make_pair()
        assert ep.tick(4.999) == []
        actions = ep.tick(5.0)
        assert actions == [TickAction.SEND_PING]
        ep.make_ping(iv=IV, now=5.0)  # caller sends; refreshes last_send
        assert ep.tick(5.1) == []
        assert ep.tick(9.999) == []
        assert ep.tick(10.0) == [TickAction.SEND_PING]

    def test_send_suppresses_ping(self):
        ep = self.make_pair()
        ep.encapsulate(b"x", iv=IV, now=3.0)
        ep.state.last_recv_ts = 3.0
        assert ep.tick(6.0) == []          # only 3s since last send
        assert ep.tick(8.0) == [TickAction.SEND_PING]

    def test_timeout_strictly_after(self):
        ep = self.make_pair()
        assert TickAction.DECLARE_TIMEOUT not in ep.tick(20.0)
        actions = ep.tick(20.001)
        assert TickAction.DECLARE_TIMEOUT in actions
        assert ep.state.peer_status is PeerStatus.TIMED_OUT
        # Session state restarts: sequence and replay window reset.
        assert ep.state.send_seq == 1

    def test_authenticated_receive_refreshes_liveness(self):
        ep = self.make_pair()
        peer = Endpoint(make_cfg(), KEY)
        ep.decapsulate(peer.encapsulate(b"x", iv=IV), now=15.0)
        assert TickAction.DECLARE_TIMEOUT not in ep.tick(30.0)
        assert TickAction.DECLARE_TIMEOUT in ep.tick(35.001)

    def test_tampered_packet_does_not_refresh(self):
        ep = self.make_pair()
        peer = Endpoint(make_cfg(), KEY)
        wire = bytearray(peer.encapsulate(b"x", iv=IV))
        wire[-1] ^= 0x01
        with pytest.raises(AuthError):
            ep.decapsulate(bytes(wire), now=15.0)
        assert ep.state.last_recv_ts == 0.0
        assert TickAction.DECLARE_TIMEOUT in ep.tick(20.001)

    def test_replay_does_not_refresh(self):
        ep = self.make_pair()
        peer = Endpoint(make_cfg(), KEY)
        wire = peer.encapsulate(b"x", iv=IV)
        ep.decapsulate(wire, now=1.0)
        with pytest.raises(ReplayError):
            ep.decapsulate(wire, now=19.0)
        assert ep.state.last_recv_ts == 1.0

    def test_no_keepalive_configured(self):
        ep = Endpoint(make_cfg(), KEY, now=0.0)
        assert ep.tick(1e6) == []


class TestStreamFraming:
    def test_roundtrip(self):
        d = StreamDeframer()
        pkts = [b"a" * 52, b"b" * 100, b"c" * 1556]
        stream = b"".join(frame_for_stream(p) for p in pkts)
        assert d.feed(stream) == pkts

    def test_partial_feeds(self):
        d = StreamDeframer()
        stream = frame_for_stream(b"hello") + frame_for_stream(b"world")
        out = []
        for i in range(len(stream)):
            out += d.feed(stream[i:i + 1])
        assert out == [b"hello", b"world"]

    def test_oversize_rejected(self):
        with pytest.raises(FormatError):
            frame_for_stream(bytes(65536))


class TestTunnelRunner:
    def run_pair(self, proto):
        port_a, port_b = 42311, 42312
        cfg_a = make_cfg(proto=proto, remote_addr="127.0.0.1", port=port_b,
                         keepalive_ping_s=0.2, keepalive_timeout_s=5.0)
        cfg_b = make_cfg(proto=proto, remote_addr="127.0.0.1", port=port_a,
                         keepalive_ping_s=0.2, keepalive_timeout_s=5.0)
        a = TunnelRunner(cfg_a, KEY, local_port=port_a)
        b = TunnelRunner(cfg_b, KEY, local_port=port_b)
        tb = threading.Thread(target=b.run, kwargs={"duration_s": 2.5})
        tb.start()
        time.sleep(0.3)
        ta = threading.Thread(target=a.run, kwargs={"duration_s": 2.0})
        ta.start()
        time.sleep(0.5)
        payload = b"\x45" + bytes(199)
        a.io.inject(payload)
        time.sleep(0.5)
        delivered = b.io.delivered()
        a.stop()
        b.stop()
        ta.join(timeout=5)
        tb.join(timeout=5)
        return a, b, payload, delivered

    def test_udp_pair_delivers_and_pings(self):
        a, b, payload, delivered = self.run_pair("udp")
        assert payload in delivered
        assert b.pings_received >= 1
        assert a.pings_received >= 1

    def test_tcp_pair_delivers(self):
        a, b, payload, delivered = self.run_pair("tcp")
        assert payload in delivered
        assert b.pings_received >= 1
