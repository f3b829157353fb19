"""HTTP facade for interactive decoding-assistant sessions.

The human plays a real external puzzle and relays the feedback here; the
service keeps the mystery list, suggests the next guess by rollout, and
exposes the averaged Q-factors behind every suggestion. Sessions live in
memory, are independent, and are mutated under a per-session lock; every
mutation re-validates that the stored history replays to the stored list.

Endpoints (JSON bodies):

* ``POST /sessions`` — create a session; body gives the rule, the codes
  (inline list, ``words_file``, or ``alphabet``+``length``), and optional
  ``heuristic``, ``prune_limit``, ``guess_mode``, ``top_k``.
* ``GET /sessions/{id}`` — full session view.
* ``POST /sessions/{id}/feedback`` — body ``{"guess": ..., "feedback":
  ...}``; feedback is marks over G/Y/- (wordle) or "black,white" counts
  (mastermind). Contradictory feedback returns 409 and leaves the
  session unchanged.
* ``DELETE /sessions/{id}`` — drop the session.
* ``GET /health`` — liveness.

A built web UI, when present under ``static/``, is served at ``/``.
"""

from __future__ import annotations

import json
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import decoder as dec
from .problems import ProblemFormatError, load_word_list

__all__ = ["create_app", "app", "SessionStore", "Session"]

DEFAULT_TOP_K = 10
DEFAULT_PRUNE = 16


class CreateSessionRequest(BaseModel):
    rule: str = "mastermind"
    codes: list[str] | None = None
    words_file: str | None = None
    alphabet: str | None = None
    length: int | None = None
    guess_mode: str = "hard"
    heuristic: str = "max-expected-shrink"
    prune_limit: int | None = Field(default=DEFAULT_PRUNE, ge=1)
    top_k: int = Field(default=DEFAULT_TOP_K, ge=1)


class FeedbackRequest(BaseModel):
    guess: str
    feedback: str


@dataclass
class Session:
    id: str
    problem: dec.DecodingProblem
    heuristic: str
    prune_limit: int | None
    top_k: int
    mystery: tuple[str, ...]
    history: list[dict] = field(default_factory=list)
    solved_with: str | None = None
    suggestions: list[tuple[str, float]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def compute_suggestions(self) -> None:
        values = dec.rollout_values(self.mystery, self.problem, self.heuristic, self.prune_limit)
        self.suggestions = values[: self.top_k]

    def replay_check(self) -> None:
        mystery = self.problem.codes
        for entry in self.history:
            feedback = dec.parse_feedback(entry["feedback"], self.problem.rule, self.problem.length)
            if dec.is_decoded(feedback, self.problem.rule, self.problem.length):
                continue
            mystery = dec.shrink(mystery, entry["guess"], feedback, self.problem.rule)
        if mystery != self.mystery:
            raise RuntimeError(f"session {self.id}: history does not replay to the stored list")

    def view(self) -> dict:
        n = len(self.mystery)
        return {
            "id": self.id,
            "rule": self.problem.rule,
            "length": self.problem.length,
            "guess_mode": self.problem.guess_mode,
            "heuristic": self.heuristic,
            "list_size": n,
            "mystery": list(self.mystery) if n <= 200 else list(self.mystery[:200]),
            "belief_weights": [1.0 / n] * n if n <= 200 else [],
            "history": list(self.history),
            "solved": self.solved_with is not None,
            "solved_with": self.solved_with,
            "suggestion": None if self.solved_with is not None else self.suggestions[0][0],
            "suggestions": [
                {"guess": g, "q_value": q} for g, q in self.suggestions
            ],
        }


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def remove(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
            del self._sessions[session_id]

    def snapshot(self) -> dict:
        """Restartable summary of every session: problem shape and history."""
        with self._lock:
            return {
                s.id: {
                    "rule": s.problem.rule,
                    "codes": list(s.problem.codes),
                    "guess_mode": s.problem.guess_mode,
                    "heuristic": s.heuristic,
                    "prune_limit": s.prune_limit,
                    "history": list(s.history),
                    "solved_with": s.solved_with,
                }
                for s in self._sessions.values()
            }

    def __len__(self) -> int:
        return len(self._sessions)


def _build_problem(req: CreateSessionRequest) -> dec.DecodingProblem:
    try:
        if req.codes:
            return dec.DecodingProblem(
                tuple(c.upper() for c in req.codes), rule=req.rule, guess_mode=req.guess_mode
            )
        if req.words_file:
            return dec.DecodingProblem(
                load_word_list(req.words_file), rule=req.rule, guess_mode=req.guess_mode
            )
        if req.alphabet and req.length:
            return dec.DecodingProblem.all_codes(
                req.alphabet, req.length, rule=req.rule, guess_mode=req.guess_mode
            )
    except (ValueError, ProblemFormatError, OSError) as e:
        raise HTTPException(status_code=422, detail=str(e)) from e
    raise HTTPException(status_code=422, detail="need codes, words_file, or alphabet+length")


def create_app(
    static_dir: str | Path | None = None, snapshot_path: str | Path | None = None
) -> FastAPI:
    """Build the app; ``snapshot_path`` enables a JSON dump of the session
    histories on shutdown (sessions are otherwise purely in-memory)."""
    store = SessionStore()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if snapshot_path is not None:
            Path(snapshot_path).write_text(json.dumps(store.snapshot(), indent=2, sort_keys=True))

    app = FastAPI(title="beliefopt decoding assistant", lifespan=lifespan)
    app.state.store = store

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(store)}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        if req.heuristic not in dec.HEURISTICS:
            raise HTTPException(status_code=422, detail=f"unknown heuristic {req.heuristic!r}")
        problem = _build_problem(req)
        session = Session(
            id=uuid.uuid4().hex,
            problem=problem,
            heuristic=req.heuristic,
            prune_limit=req.prune_limit,
            top_k=req.top_k,
            mystery=problem.codes,
        )
        session.compute_suggestions()
        store.add(session)
        return session.view()

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        return store.get(session_id).view()

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, req: FeedbackRequest):
        session = store.get(session_id)
        with session.lock:
            if session.solved_with is not None:
                raise HTTPException(status_code=409, detail="session already solved")
            guess = req.guess.strip().upper()
            if len(guess) != session.problem.length or any(
                ch not in session.problem.alphabet for ch in guess
            ):
                raise HTTPException(
                    status_code=422,
                    detail=f"guess must be {session.problem.length} symbols over the alphabet",
                )
            try:
                feedback = dec.parse_feedback(req.feedback, session.problem.rule, session.problem.length)
            except ValueError as e:
                raise HTTPException(status_code=422, detail=str(e)) from e
            if dec.is_decoded(feedback, session.problem.rule, session.problem.length):
                session.solved_with = guess
                session.history.append(
                    {"guess": guess, "feedback": dec.format_feedback(feedback, session.problem.rule)}
                )
                return session.view()
            try:
                shrunk = dec.shrink(session.mystery, guess, feedback, session.problem.rule)
            except dec.InconsistentFeedbackError as e:
                # state intentionally untouched
                raise HTTPException(status_code=409, detail=str(e)) from e
            session.mystery = shrunk
            session.history.append(
                {"guess": guess, "feedback": dec.format_feedback(feedback, session.problem.rule)}
            )
            session.compute_suggestions()
            session.replay_check()
            return session.view()

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        store.remove(session_id)
        return None

    static = Path(static_dir) if static_dir else Path(__file__).parent / "static"
    if static.is_dir():
        @app.get("/")
        def index():
            return FileResponse(static / "index.html")

        app.mount("/static", StaticFiles(directory=static), name="static")

    return app


app = create_app()
