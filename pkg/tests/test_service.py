import json
from importlib import resources

import pytest
from fastapi.testclient import TestClient

from tunbench.presets import BASELINE_TARGETS
from tunbench.report import ComparisonTable
from tunbench.service.app import app
from tunbench.wire_codec import parse_key_file

client = TestClient(app)

CONF = ("dev tun0\nremote 192.168.1.102\nport 5002\nproto udp\n"
        "cipher AES-128-CBC\nsecret static.key\ncomp-lzo\nkeepalive 5 20\n")


def data_json(name: str) -> dict:
    return json.loads(
        (resources.files("tunbench") / "data" / name).read_text())


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_keygen_produces_parseable_key():
    resp = client.post("/keygen")
    assert resp.status_code == 200
    parse_key_file(resp.json()["key_text"])  # must not raise


def test_config_parse():
    resp = client.post("/config/parse", json={"text": CONF})
    assert resp.status_code == 200
    body = resp.json()
    assert body["port"] == 5002
    assert body["compression"] is True


def test_config_parse_error_is_400():
    resp = client.post("/config/parse", json={"text": "bogus x\n"})
    assert resp.status_code == 400
    assert resp.json()["detail"]["error"] == "ConfigError"


def test_calibrate():
    resp = client.post("/calibrate",
                       json={"targets": BASELINE_TARGETS, "queue_cap": 50})
    assert resp.status_code == 200
    body = resp.json()
    assert body["capacity_bps"] == pytest.approx(11215213.33, rel=1e-6)
    assert body["fixed_overhead_s"] == pytest.approx(732.457e-6, rel=1e-6)


def test_calibrate_error_is_400():
    resp = client.post("/calibrate", json={"targets": [[512, 3.8e6]]})
    assert resp.status_code == 400
    assert resp.json()["detail"]["error"] == "CalibrationError"


def test_report_loss_matches_published_rows():
    table = data_json("table_udp_like.json")
    resp = client.post("/report/loss", json={"table": table})
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert rows[0] == {"frame_bytes": 512, "loss_mbps": "0.22",
                       "loss_pct": "5.72"}
    assert rows[1]["loss_mbps"] == "0.86"


def test_report_render_csv():
    table = data_json("table_udp_like.json")
    resp = client.post("/report/render", json={"table": table,
                                               "format": "csv"})
    assert resp.status_code == 200
    assert resp.json()["text"].splitlines()[1] == "512,3.847,3.627,5.429"


def test_report_render_unknown_format():
    table = data_json("table_udp_like.json")
    resp = client.post("/report/render", json={"table": table,
                                               "format": "xml"})
    assert resp.status_code == 400


def test_packet_seal_open_roundtrip():
    key_hex = "ab" * 36
    sealed = client.post("/packet/seal", json={
        "key_hex": key_hex, "seq": 7, "body_hex": "00" * 120,
        "compress": True, "iv_hex": "00" * 16})
    assert sealed.status_code == 200
    opened = client.post("/packet/open", json={
        "key_hex": key_hex, "wire_hex": sealed.json()["wire_hex"]})
    assert opened.status_code == 200
    body = opened.json()
    assert body["seq"] == 7
    assert body["msg_type"] == "data"
    assert body["comp_flag"] == "compressed"


def test_packet_open_rejects_tampering():
    key_hex = "ab" * 36
    sealed = client.post("/packet/seal", json={
        "key_hex": key_hex, "seq": 1, "body_hex": "11" * 32,
        "compress": False, "iv_hex": "00" * 16})
    wire = bytearray(bytes.fromhex(sealed.json()["wire_hex"]))
    wire[-1] ^= 1
    resp = client.post("/packet/open", json={
        "key_hex": key_hex, "wire_hex": bytes(wire).hex()})
    assert resp.status_code == 400
    assert resp.json()["detail"]["error"] == "AuthError"


def test_bench_run_tiny_scenario():
    scenario = {
        "schema_version": 1,
        "name": "svc-tiny",
        "link_preset": None,
        "link": {"capacity_bps": 8e6, "fixed_overhead_s": 0.0,
                 "jitter_s": 0.0, "prop_delay_s": 0.0, "queue_cap": 50,
                 "seed": 0},
        "calibrate_targets": None,
        "costs_preset": "paper2011",
        "costs": None,
        "frame_sizes": [512],
        "scenarios": ["baseline"],
        "header_kinds": ["udp_like"],
        "fill": {"kind": "zeros", "seed": 0},
        "seeds": [0],
        "search": {"resolution_bps": 500000.0, "loss_threshold": 0.0,
                   "trial_duration_s": 0.5, "line_rate_bps": 12e6},
        "load_fraction": 0.9,
        "metrics_duration_s": 0.5,
        "key_hex": "00" * 36,
    }
    resp = client.post("/bench/run", json={"scenario": scenario})
    assert resp.status_code == 200
    table = ComparisonTable.from_dict(resp.json()["tables"]["udp_like"])
    assert 6e6 <= table.rows[512]["baseline_bps"] <= 8.5e6


def test_bench_run_bad_schema_is_400():
    resp = client.post("/bench/run", json={"scenario": {"schema_version": 99}})
    assert resp.status_code == 400
