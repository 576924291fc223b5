"""HTTP service over a Session: scene snapshots, point-and-click detach,
sequence save/replay, and a newline-delimited JSON event stream.

Endpoints:
    GET  /scene                     scene snapshot
    GET  /records                   operation records so far
    POST /detach {"component_id"}   compile + execute a detach skill
    POST /sequence/save {"path"?}   persist and return the sequence document
    POST /sequence/replay {"pose_update", "sequence"|"path"}
    GET  /events                    NDJSON push stream (snapshot first)
"""

from __future__ import annotations

import json
import queue

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (AlreadyDetachedError, BusyError, EmptySessionError,
                     PrecedenceViolationError, ReplayAbortedError,
                     SceneMismatchError, TwinError, UnknownIdError)
from .registration import PoseUpdate
from .session import Session, load_sequence

HEARTBEAT_S = 2.0


def _error_payload(exc: Exception) -> dict:
    payload = {"error": type(exc).__name__.replace("Error", ""),
               "detail": str(exc)}
    if isinstance(exc, PrecedenceViolationError):
        payload["blockers"] = exc.blockers
        payload["component_id"] = exc.component_id
    if isinstance(exc, ReplayAbortedError):
        payload["record_index"] = exc.record_index
    return payload


_STATUS = (
    (BusyError, 409),
    (PrecedenceViolationError, 409),
    (AlreadyDetachedError, 409),
    (SceneMismatchError, 409),
    (EmptySessionError, 409),
    (UnknownIdError, 404),
)


def _status_for(exc: Exception) -> int:
    for cls, code in _STATUS:
        if isinstance(exc, cls):
            return code
    return 400


def create_app(session: Session) -> FastAPI:
    app = FastAPI(title="evbtwin", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.session = session

    @app.exception_handler(TwinError)
    async def twin_error_handler(_request: Request, exc: TwinError):
        return JSONResponse(status_code=_status_for(exc),
                            content=_error_payload(exc))

    @app.get("/health")
    def health():
        return {"ok": True, "busy": session.busy}

    @app.get("/scene")
    def scene():
        return session.snapshot()

    @app.get("/records")
    def records():
        return {"records": [r.to_dict() for r in session.records]}

    @app.post("/detach")
    def detach(body: dict):
        component_id = body.get("component_id")
        if not component_id:
            return JSONResponse(status_code=400,
                                content={"error": "BadRequest",
                                         "detail": "component_id required"})
        record = session.handle_detach_command(component_id)
        return {"record": record.to_dict()}

    @app.post("/sequence/save")
    def sequence_save(body: dict | None = None):
        body = body or {}
        path = body.get("path")
        doc = session.save_sequence(path) if path else session.sequence_document()
        return {"sequence": doc, "path": path}

    @app.post("/sequence/replay")
    def sequence_replay(body: dict):
        if "sequence" in body:
            doc = body["sequence"]
        elif "path" in body:
            doc = load_sequence(body["path"])
        else:
            return JSONResponse(status_code=400,
                                content={"error": "BadRequest",
                                         "detail": "sequence or path required"})
        update = PoseUpdate.from_dict(body["pose_update"])
        report = session.replay_sequence(doc, update)
        return {"report": report}

    @app.get("/events")
    def events():
        sid, q = session.subscribe()

        def stream():
            last_seq = None
            try:
                while True:
                    try:
                        event = q.get(timeout=HEARTBEAT_S)
                    except queue.Empty:
                        yield json.dumps({"type": "heartbeat"}) + "\n"
                        continue
                    seq = event.get("seq")
                    if (seq is not None and last_seq is not None
                            and seq > last_seq + 1):
                        # the subscriber queue overflowed: events were dropped
                        yield json.dumps({"type": "gap", "seq": seq}) + "\n"
                    if seq is not None:
                        last_seq = seq
                    yield json.dumps(event, sort_keys=True) + "\n"
            finally:
                session.unsubscribe(sid)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app
