"""HTTP surface of the annotation service.

Endpoints: POST /sessions, GET /sessions/{id}, POST /sessions/{id}/next-batch,
POST /sessions/{id}/labels, GET /sessions/{id}/samples/{sampleId}, GET /healthz.
One mutating operation per session runs at a time; a second mutation arriving
while the session is scoring gets 202 with a retry hint, and all other wrong
states get 409. Timestamps are UTC ISO-8601.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import schemas
from .sessions import Session, SessionError, SessionStatus, SessionStore


def _error(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code,
                        content={"error": {"code": code, "message": message}})


def _history_point(record) -> dict:
    acc = record.accuracy_pct
    return {
        "labeled_count": record.labeled_count,
        "accuracy_pct": None if isinstance(acc, float) and math.isnan(acc) else acc,
        "discovered_classes": record.discovered_classes,
    }


def _session_view(session: Session) -> dict:
    history = [_history_point(r) for r in session.history]
    return {
        "session_id": session.session_id,
        "name": session.name,
        "status": session.status.value,
        "created_at": session.created_at,
        "labeled_count": len(session.labeled),
        "pool_count": len(session.pool),
        "discovered_classes": len(session.labeled.classes()),
        "class_registry": {int(k): v for k, v in session.class_registry.items()},
        "strategy": session.selection_cfg.strategy.value,
        "batch_size": session.selection_cfg.set_size,
        "history": history,
        "curves": {
            "labeled_counts": [p["labeled_count"] for p in history],
            "accuracy_pct": [p["accuracy_pct"] for p in history],
            "discovered_classes": [p["discovered_classes"] for p in history],
        },
        "outstanding_batch_id": (session.outstanding.batch_id
                                 if session.outstanding else None),
        "state_digest": session.state_digest(),
    }


def _batch_view(session: Session) -> dict:
    batch = session.outstanding
    samples = []
    for sid in batch.sample_ids:
        features = session.pool.features(sid)
        posterior = session.net.forward(features)
        entry = {
            "sample_id": sid,
            "posterior": [float(p) for p in posterior],
            "features": None,
            "image_url": None,
        }
        if features.ndim == 3:
            entry["image_url"] = (f"/sessions/{session.session_id}"
                                  f"/samples/{sid}")
        else:
            entry["features"] = [float(v) for v in features]
        samples.append(entry)
    return {
        "batch_id": batch.batch_id,
        "session_id": session.session_id,
        "issued_at": batch.issued_at,
        "suggested_label": batch.suggested_label,
        "suggested_label_name": session.class_registry.get(
            batch.suggested_label, f"class-{batch.suggested_label}"),
        "samples": samples,
    }


def _render_png(features: np.ndarray) -> bytes:
    from PIL import Image

    arr = np.clip(features, 0.0, 1.0)
    img = (arr * 255.0).round().astype(np.uint8).transpose(1, 2, 0)
    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def create_app(state_dir="./emocnet-state", cors_origin: str | None = None,
               frontend_dir=None) -> FastAPI:
    app = FastAPI(title="emocnet annotation service", version="0.1.0")
    store = SessionStore(state_dir)
    app.state.store = store

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(SessionError)
    async def session_error_handler(request: Request, exc: SessionError):
        return _error(exc.status_code, exc.code, exc.message)

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201,
              response_model=schemas.CreateSessionResponse)
    def create_session(request: schemas.CreateSessionRequest):
        session = store.create(request.model_dump())
        return {"session_id": session.session_id,
                "status": session.status.value,
                "created_at": session.created_at}

    @app.get("/sessions/{session_id}", response_model=schemas.SessionView)
    def session_status(session_id: str):
        return _session_view(store.get(session_id))

    @app.post("/sessions/{session_id}/next-batch",
              response_model=schemas.QueryBatchView,
              responses={202: {"model": schemas.ErrorResponse}})
    def next_batch(session_id: str):
        session = store.get(session_id)
        if session.outstanding is not None:
            return _batch_view(session)  # idempotent while awaiting labels
        if not session.lock.acquire(blocking=False):
            if session.status is SessionStatus.SCORING:
                return JSONResponse(
                    status_code=202, headers={"Retry-After": "1"},
                    content={"error": {"code": "scoring_in_progress",
                                       "message": "batch is being scored; "
                                                  "retry shortly"}})
            raise SessionError(409, "busy",
                               f"session is {session.status.value}")
        try:
            store.issue_batch(session)
            return _batch_view(session)
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/labels",
              response_model=schemas.SubmitLabelsResponse)
    def submit_labels(session_id: str, request: schemas.SubmitLabelsRequest):
        session = store.get(session_id)
        if not session.lock.acquire(blocking=False):
            raise SessionError(409, "busy",
                               f"session is {session.status.value}")
        try:
            outcome = store.accept_labels(
                session, request.batch_id,
                [entry.model_dump() for entry in request.labels])
        finally:
            session.lock.release()
        record = outcome["record"]
        return {
            "session_id": session.session_id,
            "status": session.status.value,
            "labeled_count": len(session.labeled),
            "discovered_classes": len(session.labeled.classes()),
            "new_classes": {int(k): v for k, v in outcome["new_classes"].items()},
            "record": _history_point(record),
        }

    @app.get("/sessions/{session_id}/samples/{sample_id}")
    def sample_payload(session_id: str, sample_id: int):
        session = store.get(session_id)
        sample = None
        if sample_id in session.pool:
            sample = session.pool.get(sample_id)
        else:
            for s in session.labeled:
                if s.id == sample_id:
                    sample = s
                    break
        if sample is None:
            raise SessionError(404, "unknown_sample",
                               f"no sample {sample_id} in session")
        if sample.features.ndim == 3 and sample.features.shape[0] == 3:
            return Response(content=_render_png(sample.features),
                            media_type="image/png")
        return {"sample_id": sample.id,
                "features": [float(v) for v in sample.features]}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="frontend")

    return app
