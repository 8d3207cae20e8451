"""HTTP service for the annotation UI and automation clients.

Thin wiring over :mod:`statescope.service`: JSON bodies mirror the module
types, failures surface as ``{code, stage, detail}`` with a 4xx status,
and verification steps stream as JSON-lines.
"""

from __future__ import annotations

import json
import uuid
from typing import Iterator

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from . import pipeline, service, synth
from .errors import SessionNotFound, StatescopeError
from .store import SessionStore
from .traces import Session, session_from_doc, session_to_doc

NDJSON = "application/x-ndjson"


def create_app(store: SessionStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="statescope", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(StatescopeError)
    async def _statescope_error(_request: Request, err: StatescopeError):
        return JSONResponse(status_code=err.http_status, content=err.to_payload())

    # ------------------------------------------------------------ sessions

    @app.get("/schemas")
    def get_schemas():
        from .schemas import SCHEMAS

        return SCHEMAS

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.list_sessions()}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict | None = None):
        body = body or {}
        if "session" in body:
            session = session_from_doc(body["session"])
            if body.get("session_id"):
                session = Session(
                    session_id=str(body["session_id"]),
                    windows=session.windows,
                    events=session.events,
                    labels=session.labels,
                    spectrum_unit=session.spectrum_unit,
                )
        else:
            session_id = str(body.get("session_id") or uuid.uuid4())
            session = Session(session_id=session_id, windows=(), events=(), labels=())
        with store.lock(session.session_id):
            store.create(session)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_to_doc(store.load_session(session_id))

    # ------------------------------------------------------------- ingest

    @app.post("/sessions/{session_id}/events", status_code=201)
    def post_event(session_id: str, body: dict):
        kind = str(body.get("kind", ""))
        if not kind or "t_ms" not in body:
            raise StatescopeError("event needs 'kind' and 't_ms'", stage="events")
        with store.lock(session_id):
            if not store.exists(session_id):
                raise SessionNotFound(f"no session {session_id!r}")
            events = store.stage_event(session_id, kind, int(body["t_ms"]))
        return {"staged_events": len(events)}

    @app.post("/sessions/{session_id}/ingest")
    def ingest(
        session_id: str,
        window_ms: int = Form(1000),
        power: UploadFile | None = File(None),
        network: UploadFile | None = File(None),
        iq_header: UploadFile | None = File(None),
        iq_payload: UploadFile | None = File(None),
        spectra: UploadFile | None = File(None),
    ):
        with store.lock(session_id):
            if not store.exists(session_id):
                raise SessionNotFound(f"no session {session_id!r}")
            for upload, name in (
                (power, "power.csv"),
                (network, "network.csv"),
                (iq_header, "iq_header.json"),
                (iq_payload, "iq_payload.f32"),
                (spectra, "spectra.json"),
            ):
                if upload is not None:
                    store.save_raw(session_id, name, upload.file.read())
            session = service.rebuild_windows(store, session_id, window_ms)
        return {"windows": len(session.windows), "events": len(session.events)}

    @app.post("/sessions/{session_id}/annotations")
    def post_annotation(session_id: str, body: dict):
        name = str(body.get("name", ""))
        if not name:
            raise StatescopeError("annotation needs a non-empty 'name'", stage="annotations")
        window_ids = body.get("window_ids")
        if window_ids is None and "window_id" in body:
            window_ids = [body["window_id"]]
        if not window_ids:
            raise StatescopeError("annotation needs 'window_ids'", stage="annotations")
        origin = str(body.get("origin", "human"))
        with store.lock(session_id):
            service.annotate(store, session_id, name, [int(w) for w in window_ids], origin=origin)
        return {"annotated": len(window_ids), "label": name}

    # ------------------------------------------------------------ pipeline

    @app.post("/sessions/{session_id}/pipeline")
    def run_pipeline_endpoint(session_id: str, body: dict | None = None):
        config = pipeline.PipelineConfig.from_doc(body or {})
        with store.lock(session_id):
            service.store_config(store, session_id, config)
        manifest = pipeline.run_pipeline(store, session_id, config)
        return {"artifacts": manifest}

    @app.get("/sessions/{session_id}/embedding")
    def get_embedding(session_id: str):
        return service.embedding_view(store, session_id)

    @app.get("/sessions/{session_id}/correlation")
    def get_correlation(session_id: str):
        return service.correlation_doc(store, session_id)

    @app.get("/sessions/{session_id}/fsm")
    def get_fsm(session_id: str):
        return service.fsm_doc(store, session_id)

    @app.post("/sessions/{session_id}/collage")
    def post_collage(session_id: str, body: dict):
        groups = body.get("groups")
        if not isinstance(groups, dict) or not groups:
            raise StatescopeError("collage needs a non-empty 'groups' object", stage="collage")
        return service.apply_collage(store, session_id, groups)

    # ------------------------------------------------------------ verifier

    @app.post("/sessions/{session_id}/classifier")
    def train_classifier(session_id: str, body: dict | None = None):
        split_seed = int((body or {}).get("split_seed", 0))
        return {"holdout": service.train_classifier(store, session_id, split_seed)}

    @app.get("/sessions/{session_id}/verify/stream")
    def verify_stream(session_id: str, replay: str | None = None):
        steps = service.verification_steps(store, session_id, replay)

        def stream() -> Iterator[bytes]:
            for doc in steps:
                yield (json.dumps(doc, sort_keys=True) + "\n").encode()

        return StreamingResponse(stream(), media_type=NDJSON)

    # ------------------------------------------------------------ fixtures

    @app.post("/synth", status_code=201)
    def synth_session(body: dict | None = None):
        body = body or {}
        kind = str(body.get("device", "voice"))
        if kind not in synth.FIXTURES:
            raise StatescopeError(f"unknown fixture {kind!r}", stage="synth")
        fixture, script_fn = synth.FIXTURES[kind]
        session = synth.simulate(
            fixture(),
            script_fn(
                windows_per_state=int(body.get("windows_per_state", 20)),
                window_ms=int(body.get("window_ms", 1000)),
            ),
            window_ms=int(body.get("window_ms", 1000)),
            seed=int(body.get("seed", 0)),
            params=synth.SimulationParams(noise_scale=float(body.get("noise_scale", 1.0))),
            session_id=body.get("session_id"),
        )
        with store.lock(session.session_id):
            store.create(session)
        return {"session_id": session.session_id}

    return app


def app_from_env() -> FastAPI:
    return create_app(SessionStore.from_env())
