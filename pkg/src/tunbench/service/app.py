"""FastAPI service wrapping the core package.

The CLI is a thin client of these endpoints (in-process by default); a
standalone server can be started with `tunbench serve`.
"""

from __future__ import annotations

import os
from dataclasses import asdict

from fastapi import FastAPI, HTTPException

from .. import scenario as scenario_mod
from ..compressor import compress_body
from ..errors import TunbenchError
from ..link_sim import calibrate_link
from ..report import ComparisonTable, loss_table, render
from ..tunnel import parse_config
from ..wire_codec import (
    CompFlag,
    MsgType,
    PlainRecord,
    StaticKey,
    format_key_file,
    open_packet,
    parse_key_file,
    seal,
)
from . import schemas

app = FastAPI(title="tunbench", version="0.1.0")


def _bad_request(exc: TunbenchError) -> HTTPException:
    return HTTPException(status_code=400,
                         detail={"error": type(exc).__name__,
                                 "message": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse()


@app.post("/keygen", response_model=schemas.KeygenResponse)
def keygen() -> schemas.KeygenResponse:
    key = StaticKey(os.urandom(16), os.urandom(20))
    return schemas.KeygenResponse(key_text=format_key_file(key))


@app.post("/config/parse", response_model=schemas.TunnelConfigModel)
def config_parse(req: schemas.ConfigParseRequest) -> schemas.TunnelConfigModel:
    try:
        cfg = parse_config(req.text)
    except TunbenchError as exc:
        raise _bad_request(exc)
    return schemas.TunnelConfigModel(**asdict(cfg))


@app.post("/calibrate", response_model=schemas.LinkParamsModel)
def calibrate(req: schemas.CalibrateRequest) -> schemas.LinkParamsModel:
    try:
        params = calibrate_link(list(req.targets), queue_cap=req.queue_cap)
    except TunbenchError as exc:
        raise _bad_request(exc)
    return schemas.LinkParamsModel(**asdict(params))


@app.post("/bench/run", response_model=schemas.BenchRunResponse)
def bench_run(req: schemas.BenchRunRequest) -> schemas.BenchRunResponse:
    try:
        sc = scenario_mod.scenario_from_dict(req.scenario)
        tables = scenario_mod.run_scenario(sc)
    except TunbenchError as exc:
        raise _bad_request(exc)
    return schemas.BenchRunResponse(tables={
        kind: schemas.ComparisonTableModel(**_table_payload(table))
        for kind, table in tables.items()})


def _table_payload(table: ComparisonTable) -> dict:
    d = table.to_dict()
    return {"header_kind": d["header_kind"], "rows": d["rows"],
            "seeds": d["seeds"], "preset": d["preset"]}


def _table_from_model(model: schemas.ComparisonTableModel) -> ComparisonTable:
    return ComparisonTable.from_dict(model.model_dump())


@app.post("/report/loss", response_model=schemas.LossTableResponse)
def report_loss(req: schemas.LossTableRequest) -> schemas.LossTableResponse:
    try:
        rows = loss_table(_table_from_model(req.table),
                          baseline_col=req.baseline_col, vpn_col=req.vpn_col)
    except (TunbenchError, KeyError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return schemas.LossTableResponse(rows=[
        schemas.LossRowModel(frame_bytes=r.frame_bytes,
                             loss_mbps=f"{r.loss_mbps:.2f}",
                             loss_pct=f"{r.loss_pct:.2f}")
        for r in rows])


@app.post("/report/render", response_model=schemas.RenderResponse)
def report_render(req: schemas.RenderRequest) -> schemas.RenderResponse:
    try:
        text = render(_table_from_model(req.table), req.format)
    except TunbenchError as exc:
        raise _bad_request(exc)
    return schemas.RenderResponse(text=text)


@app.post("/packet/seal", response_model=schemas.SealResponse)
def packet_seal(req: schemas.SealRequest) -> schemas.SealResponse:
    try:
        key = parse_key_file(req.key_hex)
        body = bytes.fromhex(req.body_hex)
        if req.compress:
            cb = compress_body(body)
            flag, body = cb.comp_flag, cb.data
        else:
            flag = CompFlag.RAW
        iv = bytes.fromhex(req.iv_hex) if req.iv_hex else os.urandom(16)
        record = PlainRecord(MsgType.DATA, req.seq, flag, body)
        wire = seal(record, key, iv)
    except TunbenchError as exc:
        raise _bad_request(exc)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return schemas.SealResponse(wire_hex=wire.to_bytes().hex())


@app.post("/packet/open", response_model=schemas.OpenResponse)
def packet_open(req: schemas.OpenRequest) -> schemas.OpenResponse:
    try:
        key = parse_key_file(req.key_hex)
        record = open_packet(bytes.fromhex(req.wire_hex), key)
    except TunbenchError as exc:
        raise _bad_request(exc)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return schemas.OpenResponse(msg_type=record.msg_type.name.lower(),
                                seq=record.seq,
                                comp_flag=record.comp_flag.name.lower(),
                                body_hex=record.body.hex())
