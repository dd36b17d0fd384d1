"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"


class KeygenResponse(BaseModel):
    key_text: str


class ConfigParseRequest(BaseModel):
    text: str


class TunnelConfigModel(BaseModel):
    port: int
    proto: str
    remote_addr: str
    secret_path: str
    dev_name: str
    vpn_local: str
    vpn_remote: str
    cipher_id: str
    compression: bool
    keepalive_ping_s: float
    keepalive_timeout_s: float
    persist_tun: bool


class CalibrateRequest(BaseModel):
    targets: list[tuple[int, float]] = Field(
        description="(frame_bytes, throughput_bps) pairs")
    queue_cap: int = 50


class LinkParamsModel(BaseModel):
    capacity_bps: float
    fixed_overhead_s: float
    jitter_s: float
    prop_delay_s: float
    queue_cap: int
    seed: int


class ComparisonTableModel(BaseModel):
    header_kind: str
    rows: dict[str, dict[str, float]]
    seeds: list[int] = []
    preset: str = ""


class BenchRunRequest(BaseModel):
    scenario: dict


class BenchRunResponse(BaseModel):
    tables: dict[str, ComparisonTableModel]


class LossTableRequest(BaseModel):
    table: ComparisonTableModel
    baseline_col: str = "baseline_bps"
    vpn_col: str = "vpn_bps"


class LossRowModel(BaseModel):
    frame_bytes: int
    loss_mbps: str
    loss_pct: str


class LossTableResponse(BaseModel):
    rows: list[LossRowModel]


class RenderRequest(BaseModel):
    table: ComparisonTableModel
    format: str = "text_table"


class RenderResponse(BaseModel):
    text: str


class SealRequest(BaseModel):
    key_hex: str
    seq: int
    body_hex: str
    compress: bool = False
    iv_hex: Optional[str] = None


class SealResponse(BaseModel):
    wire_hex: str


class OpenRequest(BaseModel):
    key_hex: str
    wire_hex: str


class OpenResponse(BaseModel):
    msg_type: str
    seq: int
    comp_flag: str
    body_hex: str
