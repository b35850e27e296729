"""HTTP session service: the animator behind a small JSON protocol.

Strictly request-driven (the human is the only event source), so plain
request/response endpoints suffice.  Requests for the same session are
serialised; distinct sessions are independent.  Idle sessions expire.
"""

from __future__ import annotations

import secrets
import threading
import time
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .animator import ChoiceError, Session
from .itree import DEFAULT_TAU_BUDGET
from .registry import available_models, load_compiled
from .values import event_text, text, to_json

DEFAULT_IDLE_TIMEOUT = 30 * 60.0


class CreateSession(BaseModel):
    model: str
    config: Dict[str, int] = {}
    tau_budget: int = DEFAULT_TAU_BUDGET


class Choice(BaseModel):
    index: int


class _Live:
    def __init__(self, session: Session, model: str):
        self.session = session
        self.model = model
        self.lock = threading.Lock()
        self.touched = time.monotonic()


def menu_payload(session: Session) -> dict:
    menu = session.menu
    return {
        "kind": menu.kind,
        "events": [
            {
                "index": i,
                "channel": e.channel,
                "payload_text": text(e.value),
                "payload": to_json(e.value),
            }
            for i, e in enumerate(menu.events, 1)
        ],
        "history_len": len(session.history),
    }


def create_app(
    models_dir: Optional[Path] = None,
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
    static_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="csptree session service")
    sessions: Dict[str, _Live] = {}
    registry_lock = threading.Lock()

    def sweep():
        now = time.monotonic()
        stale = [sid for sid, s in sessions.items() if now - s.touched > idle_timeout]
        for sid in stale:
            sessions.pop(sid, None)

    def live(sid: str) -> _Live:
        with registry_lock:
            sweep()
            s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, "unknown or expired session")
        s.touched = time.monotonic()
        return s

    @app.get("/models")
    def models():
        return {"models": sorted(available_models(models_dir))}

    @app.post("/sessions")
    def create(req: CreateSession):
        try:
            compiled = load_compiled(req.model, req.config or None, models_dir)
        except FileNotFoundError as exc:
            raise HTTPException(404, str(exc))
        except Exception as exc:
            raise HTTPException(400, f"bad model/config: {exc}")
        session = Session(compiled, req.tau_budget)
        sid = secrets.token_urlsafe(16)
        with registry_lock:
            sweep()
            sessions[sid] = _Live(session, req.model)
        return {"session_id": sid, "model": req.model, "menu": menu_payload(session)}

    @app.post("/sessions/{sid}/choice")
    def choice(sid: str, req: Choice):
        s = live(sid)
        with s.lock:
            if s.session.menu.kind != "choices":
                raise HTTPException(409, s.session.menu.kind)
            try:
                s.session.choose_index(req.index)
            except ChoiceError as exc:
                raise HTTPException(400, str(exc))
            return menu_payload(s.session)

    @app.get("/sessions/{sid}/history")
    def history(sid: str):
        s = live(sid)
        with s.lock:
            return {
                "history": [
                    {
                        "channel": e.channel,
                        "payload_text": text(e.value),
                        "text": event_text(e),
                    }
                    for e in s.session.history
                ]
            }

    @app.post("/sessions/{sid}/reset")
    def reset(sid: str):
        s = live(sid)
        with s.lock:
            s.session.reset()
            return menu_payload(s.session)

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
