#!/usr/bin/env python3
"""Record HTTP fixtures for the chat frontend's contract tests.

Drives the real FastAPI service (real pipeline, trained or bias-fixed
parameters) through three session flows and captures every request/response
pair verbatim:

  immediate_close.json  terminal decision on the first prediction
  one_question.json     one follow-up, answered YES, closes YES
  turn_cap_close.json   clarification loop until the turn cap forces a close

Re-run after any wire-format change: python3 scripts/record_ui_fixtures.py
"""

import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).parent.parent
FIXTURE_DIR = REPO / "frontend" / "test" / "fixtures"

DOC = ("You qualify for Statutory Maternity Leave if:\n"
       "* you are an employee\n"
       "* you give your employer the correct notice\n"
       "* you live in the qualifying area")
QUESTION = "Can I qualify for Statutory Maternity Leave?"


def biased_predictor(bias_class: int, bump: float = 50.0):
    from biae.core import init_parameters
    from biae.encoder import ToyEncoder
    from biae.pipeline import PipelinePredictor

    encoder = ToyEncoder(seed=2, dim=8)
    params = init_parameters(8, seed=2)
    bias = np.zeros(4)
    bias[bias_class] = bump
    params.decision_b = params.decision_b + bias
    return PipelinePredictor(params, encoder)


def trained_predictor():
    from biae.corpus import Answer, DialogueInstance, HistoryTurn, decision_label_of
    from biae.encoder import ToyEncoder
    from biae.pipeline import PipelinePredictor
    from biae.training import TrainConfig, prepare_examples, train_decision
    from biae.weak_labels import HashEmbeddingOracle

    def make(uid, history, answer):
        return DialogueInstance(
            utterance_id=uid, tree_id="t", source_url="u", document=DOC,
            question=QUESTION, scenario="", history=tuple(history),
            gold_answer=answer, gold_decision=decision_label_of(answer))

    instances = [
        make("fix-more", [], "Are you an employee?"),
        make("fix-yes", [HistoryTurn("Are you an employee?", Answer.YES)], "Yes"),
    ]
    encoder = ToyEncoder(seed=31, dim=16)
    oracle = HashEmbeddingOracle(seed=31, dimension=32)
    examples = prepare_examples(instances, encoder, oracle)
    config = TrainConfig(learning_rate=0.02, epochs=400, batch_size=2,
                         dropout=0.0, seed=31, encoder_name=encoder.name)
    result = train_decision(examples, encoder, config, max_steps=400)
    assert result.train_accuracy == 1.0
    return PipelinePredictor(result.parameters, encoder)


class Recorder:
    def __init__(self, client):
        self.client = client
        self.steps = []

    def post(self, path, body):
        response = self.client.post(path, json=body)
        self.steps.append({
            "request": {"method": "POST", "path": path, "body": body},
            "response": {"status": response.status_code, "body": response.json()},
        })
        return response.json()

    def get(self, path):
        response = self.client.get(path)
        self.steps.append({
            "request": {"method": "GET", "path": path, "body": None},
            "response": {"status": response.status_code, "body": response.json()},
        })
        return response.json()


def record_flow(name, engine, answers):
    from fastapi.testclient import TestClient
    from biae.service import create_app

    recorder = Recorder(TestClient(create_app(engine)))
    body = recorder.post("/sessions", {"document": DOC, "question": QUESTION,
                                       "scenario": ""})
    session_id = body["session_id"]
    for answer in answers:
        if body["status"] != "AWAITING_ANSWER":
            break
        body = recorder.post(f"/sessions/{session_id}/answer",
                             {"answer": answer})
    recorder.get(f"/sessions/{session_id}")
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    out = FIXTURE_DIR / f"{name}.json"
    out.write_text(json.dumps({"flow": name, "steps": recorder.steps},
                              indent=2) + "\n", encoding="utf-8")
    print(f"recorded {len(recorder.steps)} steps -> {out}")


def main() -> int:
    from biae.service import DialogueEngine

    record_flow("immediate_close",
                DialogueEngine(biased_predictor(bias_class=0)), [])
    record_flow("one_question",
                DialogueEngine(trained_predictor()), ["YES"])
    record_flow("turn_cap_close",
                DialogueEngine(biased_predictor(bias_class=3), turn_cap=2),
                ["YES", "NO", "YES"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
