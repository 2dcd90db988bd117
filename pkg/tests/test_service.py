import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biae.corpus import Answer, DecisionLabel
from biae.errors import ValidationError
from biae.pipeline import PredictResult
from biae.service import (DialogueEngine, SessionClosed, SessionNotFound,
                          SessionStatus, SessionStore, create_app, session_wire)

IRR, YES, NO, MORE = (DecisionLabel.IRRELEVANT, DecisionLabel.YES,
                      DecisionLabel.NO, DecisionLabel.MORE)


def _result(decision, follow_up=None, logits=None):
    logits = np.array(logits if logits is not None else [0.1, 0.4, 0.2, 0.3])
    e = np.exp(logits - logits.max())
    return PredictResult(
        decision=decision,
        probabilities=e / e.sum(),
        logits=logits,
        attention=np.array([0.6, 0.4]),
        alignment=np.array([[1.0], [1.0]]),
        entailment=np.full((2, 1, 3), 1 / 3),
        hypotheses=["you are employed", "you give notice"],
        follow_up=follow_up,
    )


class ScriptedPredictor:
    """Yields scripted decisions; MORE entries carry the next question from
    the question script (cycled)."""

    def __init__(self, decisions, questions=("Are you employed?",
                                             "Do you give notice?",
                                             "Do you live in Wales?")):
        self.decisions = list(decisions)
        self.questions = list(questions)
        self.calls = 0

    def predict(self, document, question, scenario, history):
        decision = self.decisions[min(self.calls, len(self.decisions) - 1)]
        follow_up = None
        if decision is MORE:
            follow_up = self.questions[self.calls % len(self.questions)]
        self.calls += 1
        return _result(decision, follow_up)


class LoopingPredictor(ScriptedPredictor):
    """Always MORE, always the same question: must force-close."""

    def __init__(self):
        super().__init__([MORE], questions=["Are you employed?"])

    def predict(self, document, question, scenario, history):
        self.calls += 1
        return _result(MORE, "Are you employed?")


class TestEngineFlow:
    def test_terminal_first_decision_closes_immediately(self):
        engine = DialogueEngine(ScriptedPredictor([YES]))
        session = engine.create_session("Doc rule.", "Q?")
        assert session.status is SessionStatus.CLOSED
        assert session.final_decision is YES
        assert session.pending_question is None
        assert session.history == []
        assert session.asked_questions == []

    def test_more_first_decision_awaits_answer(self):
        engine = DialogueEngine(ScriptedPredictor([MORE, YES]))
        session = engine.create_session("Doc rule.", "Q?")
        assert session.status is SessionStatus.AWAITING_ANSWER
        assert session.pending_question == "Are you employed?"
        assert session.asked_questions == ["Are you employed?"]
        assert session.history == []

    def test_answer_flips_to_terminal(self):
        engine = DialogueEngine(ScriptedPredictor([MORE, YES]))
        session = engine.create_session("Doc rule.", "Q?")
        updated = engine.answer_followup(session.session_id, Answer.YES)
        assert updated.status is SessionStatus.CLOSED
        assert updated.final_decision is YES
        assert len(updated.history) == 1
        assert updated.history[0].follow_up_question == "Are you employed?"
        assert updated.history[0].follow_up_answer is Answer.YES

    def test_answering_closed_session_rejected(self):
        engine = DialogueEngine(ScriptedPredictor([NO]))
        session = engine.create_session("Doc rule.", "Q?")
        with pytest.raises(SessionClosed):
            engine.answer_followup(session.session_id, Answer.NO)

    def test_unknown_session_rejected(self):
        engine = DialogueEngine(ScriptedPredictor([YES]))
        with pytest.raises(SessionNotFound):
            engine.answer_followup("missing", Answer.YES)
        with pytest.raises(SessionNotFound):
            engine.get_session("missing")

    def test_turn_cap_close_picks_best_non_clarification(self):
        predictor = ScriptedPredictor([MORE] * 10,
                                      questions=[f"Q{k}?" for k in range(10)])
        engine = DialogueEngine(predictor, turn_cap=3)
        session = engine.create_session("Doc rule.", "Q?")
        for _ in range(3):
            session = engine.answer_followup(session.session_id, Answer.YES)
        assert session.status is SessionStatus.CLOSED
        # logits [0.1, 0.4, 0.2, 0.3]: best non-clarification class is YES
        assert session.final_decision is YES
        assert len(session.history) == 3
        assert predictor.calls == 4  # turn_cap + 1 predictions

    def test_duplicate_question_force_closes(self):
        engine = DialogueEngine(LoopingPredictor(), turn_cap=8)
        session = engine.create_session("Doc rule.", "Q?")
        assert session.status is SessionStatus.AWAITING_ANSWER
        session = engine.answer_followup(session.session_id, Answer.NO)
        assert session.status is SessionStatus.CLOSED
        assert session.final_decision is YES
        assert session.asked_questions == ["Are you employed?"]

    def test_empty_document_or_question_rejected(self):
        engine = DialogueEngine(ScriptedPredictor([YES]))
        with pytest.raises(ValidationError):
            engine.create_session("  ", "Q?")
        with pytest.raises(ValidationError):
            engine.create_session("Doc.", "")

    def test_asked_questions_invariant(self):
        predictor = ScriptedPredictor([MORE, MORE, NO])
        engine = DialogueEngine(predictor)
        session = engine.create_session("Doc rule.", "Q?")
        while session.status is SessionStatus.AWAITING_ANSWER:
            pending = 1 if session.status is SessionStatus.AWAITING_ANSWER else 0
            assert len(session.asked_questions) == len(session.history) + pending
            session = engine.answer_followup(session.session_id, Answer.YES)
        assert len(session.asked_questions) == len(session.history)

    @given(st.lists(st.sampled_from([IRR, YES, NO, MORE]), min_size=1, max_size=12),
           st.integers(min_value=1, max_value=6))
    @settings(max_examples=60, deadline=None)
    def test_every_session_terminates_within_cap(self, decisions, turn_cap):
        predictor = ScriptedPredictor(decisions,
                                      questions=[f"Q{k}?" for k in range(20)])
        engine = DialogueEngine(predictor, turn_cap=turn_cap)
        session = engine.create_session("Doc rule.", "Q?")
        answers = 0
        while session.status is SessionStatus.AWAITING_ANSWER:
            session = engine.answer_followup(session.session_id, Answer.YES)
            answers += 1
            assert answers <= turn_cap + 1
        assert session.status is SessionStatus.CLOSED
        assert predictor.calls <= turn_cap + 1
        assert session.final_decision in (IRR, YES, NO)


class TestSessionStore:
    def test_persistence(self, tmp_path):
        store = SessionStore(persist_dir=tmp_path / "sessions")
        engine = DialogueEngine(ScriptedPredictor([MORE, YES]), store=store)
        session = engine.create_session("Doc rule.", "Q?")
        saved = tmp_path / "sessions" / f"{session.session_id}.json"
        assert saved.exists()
        engine.answer_followup(session.session_id, Answer.YES)
        import json
        payload = json.loads(saved.read_text())
        assert payload["status"] == "CLOSED"
        assert payload["decision"] == "YES"


class TestWireFormat:
    def test_fields(self):
        engine = DialogueEngine(ScriptedPredictor([MORE, NO]))
        session = engine.create_session("Doc rule.", "Q?")
        wire = session_wire(session)
        assert wire["status"] == "AWAITING_ANSWER"
        assert wire["decision"] is None
        assert wire["pending_question"] == "Are you employed?"
        assert wire["attention"] == [0.6, 0.4]
        assert wire["alignment"] == [[1.0], [1.0]]
        assert wire["hypotheses"] == ["you are employed", "you give notice"]
        assert wire["history"] == []
        assert wire["turn_cap"] == 8

    def test_history_serialization(self):
        engine = DialogueEngine(ScriptedPredictor([MORE, NO]))
        session = engine.create_session("Doc rule.", "Q?")
        engine.answer_followup(session.session_id, Answer.NO)
        wire = session_wire(engine.get_session(session.session_id))
        assert wire["history"] == [{"follow_up_question": "Are you employed?",
                                    "follow_up_answer": "NO"}]
        assert wire["decision"] == "NO"


@pytest.fixture()
def client():
    from fastapi.testclient import TestClient
    engine = DialogueEngine(ScriptedPredictor([MORE, YES, MORE, NO]))
    return TestClient(create_app(engine))


class TestHttpApi:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_session_lifecycle(self, client):
        created = client.post("/sessions", json={
            "document": "Doc rule.", "question": "Q?", "scenario": ""})
        assert created.status_code == 200
        body = created.json()
        assert body["status"] == "AWAITING_ANSWER"
        session_id = body["session_id"]

        fetched = client.get(f"/sessions/{session_id}")
        assert fetched.status_code == 200
        assert fetched.json() == body  # read endpoint does not mutate

        answered = client.post(f"/sessions/{session_id}/answer",
                               json={"answer": "YES"})
        assert answered.status_code == 200
        after = answered.json()
        assert after["status"] == "CLOSED"
        assert after["decision"] == "YES"
        assert after["history"][0]["follow_up_answer"] == "YES"

        again = client.post(f"/sessions/{session_id}/answer",
                            json={"answer": "NO"})
        assert again.status_code == 409

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/answer",
                           json={"answer": "YES"}).status_code == 404

    def test_invalid_answer_422(self, client):
        created = client.post("/sessions", json={
            "document": "Doc rule.", "question": "Q?"})
        session_id = created.json()["session_id"]
        response = client.post(f"/sessions/{session_id}/answer",
                               json={"answer": "maybe"})
        assert response.status_code == 422

    def test_empty_document_400(self, client):
        response = client.post("/sessions", json={
            "document": "  ", "question": "Q?"})
        assert response.status_code == 400

    def test_generator_failure_503_and_session_recovers(self):
        from fastapi.testclient import TestClient
        from biae.errors import GenerationError

        class FlakyPredictor(ScriptedPredictor):
            def __init__(self):
                super().__init__([MORE])
                self.fail_next = False

            def predict(self, document, question, scenario, history):
                if self.fail_next:
                    self.fail_next = False
                    raise GenerationError("decoder unavailable")
                return super().predict(document, question, scenario, history)

        predictor = FlakyPredictor()
        engine = DialogueEngine(predictor)
        client = TestClient(create_app(engine))
        created = client.post("/sessions", json={
            "document": "Doc rule.", "question": "Q?"})
        session_id = created.json()["session_id"]

        predictor.fail_next = True
        failed = client.post(f"/sessions/{session_id}/answer",
                             json={"answer": "YES"})
        assert failed.status_code == 503

        recovered = client.get(f"/sessions/{session_id}")
        assert recovered.json()["status"] == "AWAITING_ANSWER"
        assert recovered.json()["pending_question"] == created.json()["pending_question"]
        retried = client.post(f"/sessions/{session_id}/answer",
                              json={"answer": "YES"})
        assert retried.status_code == 200
