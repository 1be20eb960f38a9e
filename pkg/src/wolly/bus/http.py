"""HTTP surface of the command bus plus chat and identity endpoints.

All payloads are JSON (the same structured notation as the block-tree
documents); auth is a bearer token from POST /api/login; error bodies are
``{"code": ..., "reason": ...}``. The robot consumes a newline-delimited
JSON push stream at /api/robot/stream carrying ``deliver`` and
``heartbeat`` events.
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..blocks import CompileError, CompileLimits, compile_blocks, parse_blocks
from ..chat import ChatService
from ..emotion.wire import parse_response, render_response
from ..identity import DimensionMismatch, IdentityRegistry, UnknownProfile
from ..model import ParseError, Program, parse_script, serialize_instruction
from .core import BusError, CommandBus, SubscriptionClosed, Unauthorized


def _error(code: str, reason: str, status: int) -> JSONResponse:
    return JSONResponse({"code": code, "reason": reason}, status_code=status)


def _bearer_token(request: Request) -> str:
    header = request.headers.get("authorization", "")
    if not header.lower().startswith("bearer "):
        raise Unauthorized("missing bearer token")
    return header[7:].strip()


async def _json_body(request: Request) -> dict:
    try:
        doc = await request.json()
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid JSON body: {e}")
    if not isinstance(doc, dict):
        raise ValueError("request body must be a JSON object")
    return doc


def _require(doc: dict, field: str, kind=str):
    value = doc.get(field)
    if not isinstance(value, kind) or (kind is str and not value):
        raise ValueError(f"field {field!r} (of type {kind.__name__}) is required")
    return value


def create_bus_app(bus: CommandBus, chat: ChatService, registry: IdentityRegistry,
                   compile_limits: CompileLimits = CompileLimits(),
                   ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="wolly-bus", docs_url=None, redoc_url=None)

    @app.exception_handler(BusError)
    async def bus_error(request: Request, exc: BusError):
        return _error(exc.code, exc.reason, exc.http_status)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return _error("bad_request", str(exc), 400)

    # -- accounts ---------------------------------------------------------

    @app.post("/api/accounts", status_code=201)
    async def create_account(request: Request):
        doc = await _json_body(request)
        account_id = bus.create_account(
            _require(doc, "username"), _require(doc, "password"), _require(doc, "role"))
        return {"account_id": account_id}

    @app.post("/api/login")
    async def login(request: Request):
        doc = await _json_body(request)
        session = bus.login(_require(doc, "username"), _require(doc, "password"))
        return {"token": session.token, "role": session.role, "account_id": session.account_id}

    # -- programs and teleop ------------------------------------------------

    @app.post("/api/programs", status_code=202)
    async def submit_program(request: Request):
        token = _bearer_token(request)
        doc = await _json_body(request)
        fmt = doc.get("format", "blocks")
        if fmt == "blocks":
            tree_doc = doc.get("tree")
            if tree_doc is None:
                raise ValueError("field 'tree' is required for format=blocks")
            try:
                tree = parse_blocks(tree_doc)
                program = compile_blocks(tree, compile_limits)
            except ParseError as e:
                return JSONResponse(
                    {"code": "parse_error", "reason": e.reason, "path": e.path},
                    status_code=422)
            except CompileError as e:
                return JSONResponse(
                    {"code": "compile_error", "reason": e.reason, "error_class": e.code},
                    status_code=422)
        elif fmt == "script":
            try:
                program = Program(tuple(parse_script(_require(doc, "text"))))
            except ParseError as e:
                return _error("parse_error", str(e), 422)
        else:
            raise ValueError(f"unknown program format {fmt!r}")
        program_id = bus.submit_program(token, program)
        return {"program_id": program_id, "length": len(program)}

    @app.post("/api/teleop", status_code=202)
    async def teleop(request: Request):
        token = _bearer_token(request)
        doc = await _json_body(request)
        program_id = bus.teleop(token, _require(doc, "action"))
        return {"program_id": program_id}

    @app.get("/api/status")
    async def status(request: Request):
        return bus.status(_bearer_token(request))

    @app.get("/api/expressions")
    async def expressions(request: Request):
        from ..model import EXPRESSIONS

        _bearer_token(request)  # any valid session shape; content is static
        return {"expressions": list(EXPRESSIONS)}

    # -- robot channel ---------------------------------------------------------

    @app.get("/api/robot/stream")
    def robot_stream(request: Request):
        token = _bearer_token(request)
        subscription = bus.subscribe(token)
        interval = bus.heartbeat_interval

        def events():
            try:
                yield json.dumps({"type": "hello", "heartbeat_interval": interval}) + "\n"
                while True:
                    try:
                        event = subscription.next_event(timeout=interval)
                    except SubscriptionClosed:
                        break
                    if event is None:
                        yield json.dumps({"type": "heartbeat"}) + "\n"
                    else:
                        yield json.dumps({
                            "type": "deliver",
                            "program_id": event.program_id,
                            "seq": event.seq,
                            "instruction": serialize_instruction(event.instruction),
                        }) + "\n"
                    subscription.touch()
            finally:
                subscription.close()

        return StreamingResponse(events(), media_type="application/x-ndjson")

    @app.post("/api/robot/ack")
    async def robot_ack(request: Request):
        token = _bearer_token(request)
        doc = await _json_body(request)
        bus.ack(token, _require(doc, "program_id"), _require(doc, "seq", int))
        return {"ok": True}

    @app.post("/api/robot/state")
    async def robot_state(request: Request):
        token = _bearer_token(request)
        doc = await _json_body(request)
        bus.report_state(token, doc)
        return {"ok": True}

    @app.post("/api/robot/emotion")
    async def robot_emotion(request: Request):
        _bearer_token(request)
        body = await request.body()
        try:
            report = parse_response(body)
        except (ValueError, KeyError) as e:
            return _error("bad_report", str(e), 422)
        chat.on_emotion_report(report)
        return {"ok": True}

    @app.get("/api/emotion/latest")
    async def emotion_latest(request: Request):
        _bearer_token(request)
        report = chat.latest_report
        if report is None:
            return {"report": None}
        return {"report": json.loads(render_response(report))}

    # -- chat --------------------------------------------------------------------

    @app.post("/api/chat")
    async def chat_endpoint(request: Request):
        _bearer_token(request)
        doc = await _json_body(request)
        session_id = _require(doc, "session")
        text = doc.get("text", "")
        embedding = doc.get("embedding")
        reply = chat.chat(session_id, text, embedding=embedding,
                          picture_ref=doc.get("picture_ref"))
        return {"text": reply}

    # -- identity -------------------------------------------------------------------

    @app.post("/identity/enroll", status_code=201)
    async def identity_enroll(request: Request):
        _bearer_token(request)
        doc = await _json_body(request)
        try:
            profile_id = registry.enroll(
                _require(doc, "name"), _require(doc, "age", int),
                _require(doc, "embedding", list), doc.get("picture_ref"))
        except DimensionMismatch as e:
            return _error("dimension_mismatch", str(e), 422)
        return {"profile_id": profile_id}

    @app.post("/identity/recognize")
    async def identity_recognize(request: Request):
        _bearer_token(request)
        doc = await _json_body(request)
        try:
            hit = registry.recognize(_require(doc, "embedding", list))
        except DimensionMismatch as e:
            return _error("dimension_mismatch", str(e), 422)
        if hit is None:
            return {"outcome": "unknown"}
        return {"outcome": "known", "profile_id": hit.profile_id, "distance": hit.distance}

    @app.post("/identity/interaction")
    async def identity_interaction(request: Request):
        _bearer_token(request)
        doc = await _json_body(request)
        emotion = None
        if doc.get("emotion") is not None:
            entry = doc["emotion"]
            emotion = (entry.get("categories", []), entry.get("vad", []))
        try:
            registry.record_interaction(_require(doc, "profile_id"),
                                        doc.get("interests", []), emotion)
        except UnknownProfile:
            return _error("unknown_profile", "no such profile", 404)
        except DimensionMismatch as e:
            return _error("dimension_mismatch", str(e), 422)
        return {"ok": True}

    @app.get("/identity/{profile_id}")
    async def identity_get(request: Request, profile_id: str):
        _bearer_token(request)
        try:
            p = registry.get(profile_id)
        except UnknownProfile:
            return _error("unknown_profile", "no such profile", 404)
        return {
            "id": p.id, "name": p.name, "age": p.age,
            "picture_ref": p.picture_ref, "interests": list(p.interests),
            "emotion_log": [
                {"ts": e.timestamp, "categories": list(e.categories), "vad": list(e.vad)}
                for e in p.emotion_log
            ],
        }

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
