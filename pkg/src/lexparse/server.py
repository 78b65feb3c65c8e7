"""HTTP service for interactive episodes: stepwise parsing, KB inspection,
and expert lexicon submission.

The server drives the same EpisodeRunner as the offline harness, so a
fully scripted client produces records identical to an offline run on the
same inputs.  Sessions persist to disk after every mutation so a crashed
console can resume.  Within a session, mutations (parse, lexicon) are
serialized in arrival order by a per-session lock.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .harness import EpisodeConfig, EpisodeRunner, ParseRecord
from .types import Domain, EntryValidationError, Instance, LexiconEntry, Source


class LexiconSubmission(BaseModel):
    entries: list[dict]


@dataclass
class Session:
    id: str
    runner: EpisodeRunner
    stream: list[Instance]
    status: str = "ACTIVE"  # ACTIVE | FINISHED | ABORTED
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def cursor(self) -> int:
        return self.runner.t

    def to_state(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "t": self.runner.t,
            "config": self.runner.config.to_dict(),
            "kb": [e.to_dict() for e in self.runner.kb.entries],
            "records": [r.to_dict() for r in self.runner.records],
        }


def _restore_session(state: dict, stream: list[Instance]) -> Session:
    config = EpisodeConfig.from_dict(state["config"])
    runner = EpisodeRunner(config)
    runner.kb.add_entries([LexiconEntry.from_dict(e) for e in state["kb"]])
    runner.records = [ParseRecord.from_dict(r) for r in state["records"]]
    runner.t = state["t"]
    return Session(id=state["id"], runner=runner, stream=stream, status=state["status"])


def create_app(
    stream: list[Instance],
    config: EpisodeConfig,
    state_dir: str | Path | None = None,
    console_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="lexparse feedback API")
    sessions: dict[str, Session] = {}
    state_path = Path(state_dir) if state_dir else None
    if state_path:
        state_path.mkdir(parents=True, exist_ok=True)

    def persist(session: Session) -> None:
        if state_path:
            (state_path / f"session-{session.id}.json").write_text(
                json.dumps(session.to_state(), ensure_ascii=False), encoding="utf-8"
            )

    def get_session(session_id: str) -> Session:
        if session_id in sessions:
            return sessions[session_id]
        if state_path:
            f = state_path / f"session-{session_id}.json"
            if f.exists():
                session = _restore_session(
                    json.loads(f.read_text(encoding="utf-8")), stream
                )
                sessions[session_id] = session
                return session
        raise HTTPException(404, f"unknown session {session_id}")

    @app.post("/sessions")
    def create_session() -> dict:
        session = Session(
            id=uuid.uuid4().hex[:12],
            runner=EpisodeRunner(config),
            stream=stream,
        )
        sessions[session.id] = session
        persist(session)
        return {
            "id": session.id,
            "status": session.status,
            "t": session.cursor,
            "stream_size": len(stream),
        }

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str) -> dict:
        session = get_session(session_id)
        return {
            "id": session.id,
            "status": session.status,
            "t": session.cursor,
            "stream_size": len(session.stream),
            "kb_size": len(session.runner.kb),
        }

    @app.get("/sessions/{session_id}/next")
    def peek_next(session_id: str) -> dict:
        session = get_session(session_id)
        if session.cursor >= len(session.stream):
            raise HTTPException(409, "session finished; no next instance")
        instance = session.stream[session.cursor]
        retrieved = session.runner._retrieve(instance.x)
        return {
            "t": session.cursor + 1,
            "x": instance.x,
            "retrieved": retrieved.to_dict(),
        }

    @app.post("/sessions/{session_id}/parse")
    def parse_next(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.status != "ACTIVE":
                raise HTTPException(409, f"session is {session.status}")
            instance = session.stream[session.cursor]
            try:
                record = session.runner.step(instance)
            except Exception as exc:
                session.status = "ABORTED"
                persist(session)
                raise HTTPException(502, f"parse failed: {exc}") from exc
            if session.cursor >= len(session.stream):
                session.status = "FINISHED"
            persist(session)
            return {
                "record": record.to_dict(),
                "status": session.status,
                "kb_size": len(session.runner.kb),
            }

    @app.post("/sessions/{session_id}/lexicon")
    def submit_lexicon(session_id: str, submission: LexiconSubmission) -> dict:
        session = get_session(session_id)
        with session.lock:
            try:
                entries = [
                    LexiconEntry(
                        key=e.get("key", ""),
                        value=e.get("value", ""),
                        domain=Domain(e.get("domain", session.runner.config.domain.value)),
                        source=Source(e.get("source", "EXPERT_UI")),
                    )
                    for e in submission.entries
                ]
            except EntryValidationError as exc:
                raise HTTPException(422, str(exc)) from exc
            except ValueError as exc:
                raise HTTPException(422, f"bad enum value: {exc}") from exc
            added = session.runner.kb.add_entries(entries)
            persist(session)
            return {
                "added": added,
                "submitted": len(entries),
                "kb_size": len(session.runner.kb),
            }

    @app.get("/sessions/{session_id}/kb")
    def get_kb(session_id: str) -> dict:
        session = get_session(session_id)
        return {
            "identity_mode": session.runner.kb.identity_mode.value,
            "entries": [e.to_dict() for e in session.runner.kb.entries],
        }

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str) -> dict:
        session = get_session(session_id)
        if not session.runner.records:
            raise HTTPException(409, "no parses yet; report unavailable")
        return session.runner.report().to_dict()

    @app.get("/sessions/{session_id}/records")
    def get_records(session_id: str) -> dict:
        session = get_session(session_id)
        return {"records": [r.to_dict() for r in session.runner.records]}

    console = Path(console_dir) if console_dir else None
    if console and console.is_dir():
        app.mount("/console", StaticFiles(directory=console, html=True), name="console")

        @app.get("/")
        def index():
            return RedirectResponse("/console/")

    return app
