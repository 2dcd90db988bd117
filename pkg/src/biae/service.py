"""Interactive dialogue engine and HTTP API.

One session = one decide -> (ask follow-up | answer) loop.  Sessions are
serialized per-id; the model parameters are shared read-only.  The engine
force-closes on duplicate follow-up questions (generators can loop) and at
a turn cap, answering with the best non-clarification class.

No ``from __future__ import annotations`` here: the HTTP layer's request
models are function-local, and FastAPI cannot resolve stringified
annotations that point at local names.
"""

import json
import re
import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .corpus import Answer, DecisionLabel, HistoryTurn
from .errors import GenerationError, InternalError, ValidationError
from .pipeline import PredictResult

TURN_CAP_DEFAULT = 8


class SessionNotFound(KeyError):
    pass


class SessionClosed(RuntimeError):
    pass


class SessionStatus(Enum):
    AWAITING_ANSWER = "AWAITING_ANSWER"
    CLOSED = "CLOSED"


@dataclass
class SessionState:
    session_id: str
    document: str
    question: str
    scenario: str
    turn_cap: int = TURN_CAP_DEFAULT
    history: list[HistoryTurn] = field(default_factory=list)
    asked_questions: list[str] = field(default_factory=list)
    status: SessionStatus = SessionStatus.AWAITING_ANSWER
    pending_question: str | None = None
    final_decision: DecisionLabel | None = None
    last_result: PredictResult | None = None

    @property
    def turns_taken(self) -> int:
        return len(self.history)


def _normalize_question(question: str) -> str:
    return re.sub(r"\s+", " ", question).strip().rstrip("?.").casefold()


def _best_non_clarification(logits: np.ndarray) -> DecisionLabel:
    terminal = logits[: DecisionLabel.MORE.value]
    return DecisionLabel(int(np.argmax(terminal)))


class SessionStore:
    """In-process session map with per-session locks and optional
    file-backed persistence (one JSON file per session id)."""

    def __init__(self, persist_dir: str | Path | None = None):
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._persist_dir = Path(persist_dir) if persist_dir else None
        if self._persist_dir:
            self._persist_dir.mkdir(parents=True, exist_ok=True)

    def add(self, state: SessionState) -> None:
        with self._registry_lock:
            self._sessions[state.session_id] = state
            self._locks[state.session_id] = threading.Lock()
        self._persist(state)

    def get(self, session_id: str) -> SessionState:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionNotFound(session_id) from None

    def lock(self, session_id: str) -> threading.Lock:
        try:
            return self._locks[session_id]
        except KeyError:
            raise SessionNotFound(session_id) from None

    def _persist(self, state: SessionState) -> None:
        if not self._persist_dir:
            return
        path = self._persist_dir / f"{state.session_id}.json"
        path.write_text(json.dumps(session_wire(state), indent=2),
                        encoding="utf-8")

    def save(self, state: SessionState) -> None:
        self._persist(state)


class DialogueEngine:
    """Runs the clarification loop against a predictor."""

    def __init__(self, predictor, turn_cap: int = TURN_CAP_DEFAULT,
                 store: SessionStore | None = None):
        if turn_cap < 1:
            raise ValidationError("turn_cap must be >= 1")
        self.predictor = predictor
        self.turn_cap = turn_cap
        self.store = store or SessionStore()

    def create_session(self, document: str, question: str,
                       scenario: str = "") -> SessionState:
        if not document.strip():
            raise ValidationError("document must be non-empty")
        if not question.strip():
            raise ValidationError("question must be non-empty")
        state = SessionState(
            session_id=uuid.uuid4().hex,
            document=document,
            question=question,
            scenario=scenario,
            turn_cap=self.turn_cap,
        )
        self._advance(state)
        self.store.add(state)
        return state

    def get_session(self, session_id: str) -> SessionState:
        return self.store.get(session_id)

    def answer_followup(self, session_id: str, answer: Answer) -> SessionState:
        state = self.store.get(session_id)
        with self.store.lock(session_id):
            if state.status is not SessionStatus.AWAITING_ANSWER:
                raise SessionClosed(session_id)
            pending = state.pending_question
            state.history.append(HistoryTurn(
                follow_up_question=pending,
                follow_up_answer=answer,
            ))
            state.pending_question = None
            try:
                self._advance(state)
            except Exception:
                # Predictor/generator failure: leave the session answerable.
                state.history.pop()
                state.pending_question = pending
                raise
            self.store.save(state)
        return state

    def _advance(self, state: SessionState) -> None:
        result = self.predictor.predict(state.document, state.question,
                                        state.scenario, tuple(state.history))
        state.last_result = result
        if result.decision is not DecisionLabel.MORE:
            self._close(state, result.decision)
            return
        if state.turns_taken >= state.turn_cap:
            self._close(state, _best_non_clarification(result.logits))
            return
        follow_up = result.follow_up
        seen = {_normalize_question(q) for q in state.asked_questions}
        if follow_up is None or _normalize_question(follow_up) in seen:
            # Redundant generation: never loop on an already-asked question.
            self._close(state, _best_non_clarification(result.logits))
            return
        state.asked_questions.append(follow_up)
        state.pending_question = follow_up
        state.status = SessionStatus.AWAITING_ANSWER

    @staticmethod
    def _close(state: SessionState, decision: DecisionLabel) -> None:
        state.status = SessionStatus.CLOSED
        state.final_decision = decision
        state.pending_question = None


def session_wire(state: SessionState) -> dict:
    """JSON-safe session view consumed by the chat frontend."""
    result = state.last_result
    return {
        "session_id": state.session_id,
        "status": state.status.value,
        "decision": state.final_decision.name if state.final_decision else None,
        "pending_question": state.pending_question,
        "history": [
            {"follow_up_question": t.follow_up_question,
             "follow_up_answer": t.follow_up_answer.value}
            for t in state.history
        ],
        "asked_questions": list(state.asked_questions),
        "turn_cap": state.turn_cap,
        "turns_taken": state.turns_taken,
        "hypotheses": list(result.hypotheses) if result else [],
        "attention": result.attention.tolist() if result is not None else [],
        "alignment": result.alignment.tolist() if result is not None else [],
        "probabilities": result.probabilities.tolist() if result is not None else [],
    }


def create_app(engine: DialogueEngine):
    """FastAPI app over the engine; read endpoints never mutate state."""
    from fastapi import FastAPI, HTTPException
    from pydantic import BaseModel

    class CreateSessionRequest(BaseModel):
        document: str
        question: str
        scenario: str = ""

    class AnswerRequest(BaseModel):
        answer: str

    app = FastAPI(title="biae dialogue service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(request: CreateSessionRequest):
        try:
            state = engine.create_session(request.document, request.question,
                                          request.scenario)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except (GenerationError, InternalError) as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        return session_wire(state)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return session_wire(engine.get_session(session_id))
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, request: AnswerRequest):
        try:
            parsed = Answer.parse(request.answer)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            state = engine.answer_followup(session_id, parsed)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")
        except SessionClosed:
            raise HTTPException(status_code=409, detail="session is closed")
        except (GenerationError, InternalError) as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        return session_wire(state)

    return app
