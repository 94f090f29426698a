"""HTTP/JSON API consumed by the annotation console.

Thin wrapper over the Session command layer: every mutation the UI can
perform maps 1:1 onto a library call, so HTTP-driven and in-process runs
reach exactly the same states. One question is pending per session; answer
submission is idempotent on (object_id, seq) and anything else gets a 409
echoing the still-pending question.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .exports import export_dataset
from .session import (
    BadAnswer,
    Session,
    SessionConfig,
    SessionError,
    StaleQuestion,
)

DATA_DIR_ENV = "VISLABEL_DATA_DIR"
DEFAULT_DATA_DIR = "./vislabel-data"


def data_dir_from_env() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR))


class NewCategoryBody(BaseModel):
    name: str | None = None
    genus: str
    differentia: str = ""


class AnswerBody(BaseModel):
    object_id: str
    seq: int
    verdict: bool | None = None
    new_category: NewCategoryBody | None = None


class SessionBody(BaseModel):
    session_id: str
    feature_dim: int = Field(gt=0)
    tie_break: str = "ascending_category_id"
    oracle_mode: str = "interactive"
    flip_p: float = 0.0
    seed: int = 0
    manifest: str | None = None
    reference: str | None = None
    seed_hierarchy: bool = True


class SessionRegistry:
    """Sessions opened lazily from the data directory and kept live."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self._open: dict[str, Session] = {}

    def get(self, session_id: str) -> Session:
        if session_id not in self._open:
            session_dir = self.data_dir / session_id
            if not (session_dir / "events.jsonl").exists():
                raise KeyError(session_id)
            self._open[session_id] = Session.open(session_dir)
        return self._open[session_id]

    def create(self, config: SessionConfig) -> Session:
        session = Session.create(config, self.data_dir / config.session_id)
        self._open[config.session_id] = session
        return session


def create_app(
    data_dir: str | Path | None = None, ui_dir: str | Path | None = None
) -> FastAPI:
    registry = SessionRegistry(Path(data_dir) if data_dir else data_dir_from_env())
    app = FastAPI(title="vislabel", version="0.1.0")
    app.state.registry = registry
    # local tool: the console may be served from another origin (or files)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if ui_dir:
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    def _session(session_id: str) -> Session:
        try:
            return registry.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionBody):
        try:
            session = registry.create(SessionConfig(**body.model_dump()))
        except SessionError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"session_id": body.session_id, "state": session.state_view()}

    @app.get("/session/{session_id}/state")
    def get_state(session_id: str):
        return _session(session_id).state_view()

    @app.get("/session/{session_id}/next")
    def get_next(session_id: str):
        return _session(session_id).next_view()

    @app.get("/session/{session_id}/stats")
    def get_stats(session_id: str):
        return _session(session_id).stats()

    @app.get("/session/{session_id}/export")
    def get_export(session_id: str):
        bundle = export_dataset(_session(session_id))
        return {
            "session_id": session_id,
            "dataset_jsonl": bundle.dataset_jsonl(),
            "hierarchy_json": bundle.hierarchy_json,
            "transcripts_jsonl": bundle.transcripts_jsonl(),
        }

    @app.post("/session/{session_id}/answer")
    def post_answer(session_id: str, body: AnswerBody):
        session = _session(session_id)
        try:
            ack = session.submit_answer(
                object_id=body.object_id,
                seq=body.seq,
                verdict=body.verdict,
                new_category=body.new_category.model_dump() if body.new_category else None,
            )
        except StaleQuestion as e:
            return JSONResponse(
                status_code=409, content={"error": str(e), "pending": e.pending}
            )
        except BadAnswer as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"ack": ack, "next": session.next_view()}

    return app
