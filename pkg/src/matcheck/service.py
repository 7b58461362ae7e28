"""Stateless HTTP facade for interactive checking.

One JSON envelope shape everywhere: ``{"schema": 1, "ok": bool}`` plus
exactly one of ``result`` / ``diagnostics``.  The composition travels in
the request body on every call — the service holds the block library
(read-only) and nothing else, so any request sequence can be replayed
against a fresh process with identical responses.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .checker import check, propagate
from .composition import ResolveFailure, auto_attach_power, resolve
from .merger import MergeRefused, export_bom_csv, export_flat_json, merge
from .model import SchematicBlock
from .parsing import (
    SCHEMA_VERSION,
    ParseFailure,
    composition_to_json_obj,
    parse_composition,
)

DEFAULT_PORT = 8733


def _ok(result) -> JSONResponse:
    return JSONResponse(status_code=200,
                        content={"schema": SCHEMA_VERSION, "ok": True,
                                 "result": result})


def _fail(status: int, diagnostics: list[dict]) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"schema": SCHEMA_VERSION, "ok": False,
                                 "diagnostics": diagnostics})


def block_summaries(library: Mapping[str, SchematicBlock]) -> list[dict]:
    out = []
    for block_id in sorted(library):
        block = library[block_id]
        out.append({
            "block_id": block.block_id,
            "version": block.version,
            "ports": [
                {"name": p.name, "kind": p.iface.kind, "role": p.iface.role,
                 "required": p.required}
                for p in block.ports
            ],
        })
    return out


def rail_loads(resolved) -> list[dict]:
    state = propagate(resolved)
    return [
        {"rail": rail.name,
         "draw_milliamps": state.rail_draw[rail.name],
         "supply_milliamps": state.rail_supply[rail.name]}
        for rail in resolved.doc.rails
    ]


def create_app(library: Mapping[str, SchematicBlock],
               cors_origins: Sequence[str] = ("*",)) -> FastAPI:
    app = FastAPI(title="matcheck", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    async def _parse_request(request: Request):
        body = await request.body()
        doc = parse_composition(body)  # raises ParseFailure
        return resolve(doc, library), doc  # raises ResolveFailure

    @app.get("/api/v1/blocks")
    async def get_blocks() -> JSONResponse:
        return _ok(block_summaries(library))

    @app.post("/api/v1/check")
    async def post_check(request: Request) -> JSONResponse:
        try:
            resolved, _doc = await _parse_request(request)
        except ParseFailure as failure:
            return _fail(400, [d.to_json_obj() for d in failure.diagnostics])
        except ResolveFailure as failure:
            return _fail(422, [e.to_json_obj() for e in failure.errors])
        diags = check(resolved)
        return _ok({
            "diagnostics": [d.to_json_obj() for d in diags],
            "rail_loads": rail_loads(resolved),
        })

    @app.post("/api/v1/merge")
    async def post_merge(request: Request) -> JSONResponse:
        try:
            resolved, _doc = await _parse_request(request)
        except ParseFailure as failure:
            return _fail(400, [d.to_json_obj() for d in failure.diagnostics])
        except ResolveFailure as failure:
            return _fail(422, [e.to_json_obj() for e in failure.errors])
        diags = check(resolved)
        try:
            merged = merge(resolved, diags)
        except MergeRefused as refused:
            return _fail(409, [d.to_json_obj() for d in refused.blocking])
        return _ok({
            "flat_json": export_flat_json(merged).decode("utf-8"),
            "bom_csv": export_bom_csv(merged).decode("utf-8"),
            "diagnostics": [d.to_json_obj() for d in diags],
        })

    @app.post("/api/v1/autoattach")
    async def post_autoattach(request: Request) -> JSONResponse:
        try:
            body = await request.body()
            doc = parse_composition(body)
            attached, diags = auto_attach_power(doc, library)
        except ParseFailure as failure:
            return _fail(400, [d.to_json_obj() for d in failure.diagnostics])
        except ResolveFailure as failure:
            return _fail(422, [e.to_json_obj() for e in failure.errors])
        return _ok({
            "document": composition_to_json_obj(attached),
            "diagnostics": [d.to_json_obj() for d in diags],
        })

    return app
