"""End-to-end inference: segment -> encode -> decide, plus follow-up
generation when the decision asks for clarification.  Shared by the eval
harness, the dialogue engine, and the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import core, qgen, training
from .corpus import DecisionLabel, HistoryTurn
from .encoder import EncoderContract, build_input, encode
from .segmenter import (SegmenterContract, build_premise_set,
                        segment_document, segment_scenario)


@dataclass
class PredictResult:
    decision: DecisionLabel
    probabilities: np.ndarray      # (4,)
    logits: np.ndarray             # (4,)
    attention: np.ndarray          # (m,)
    alignment: np.ndarray          # (m, n)
    entailment: np.ndarray         # (m, n, 3)
    hypotheses: list[str]
    follow_up: str | None = None


class PipelinePredictor:
    """Stateless document+question+history -> decision pipeline over a
    fixed parameter set; safe for concurrent read-only inference."""

    def __init__(self, params: core.BiAEParameters, encoder: EncoderContract,
                 generator: qgen.GeneratorContract | None = None,
                 segmenter: SegmenterContract | None = None,
                 decision_weight: float = 2.0):
        self.params = params
        self.encoder = encoder
        self.generator = generator or qgen.TemplateFallbackGenerator(segmenter)
        self.segmenter = segmenter
        self.decision_weight = decision_weight

    @classmethod
    def from_checkpoint(cls, path: str | Path,
                        generator: qgen.GeneratorContract | None = None,
                        segmenter: SegmenterContract | None = None) -> "PipelinePredictor":
        params, encoder, meta = training.load_checkpoint(path)
        weight = meta.get("config", {}).get("decision_weight", 2.0)
        return cls(params, encoder, generator, segmenter, decision_weight=weight)

    def predict(self, document: str, question: str, scenario: str = "",
                history: tuple[HistoryTurn, ...] | list[HistoryTurn] = ()) -> PredictResult:
        hypotheses = segment_document(document, self.segmenter)
        premises = build_premise_set(segment_scenario(scenario), history)
        marked = build_input(hypotheses, question, premises, self.encoder)
        hypotheses = hypotheses[: len(marked.hypothesis_marker_positions)]
        encoded = encode(marked, self.encoder)
        result = core.forward(encoded.hypothesis_vectors, encoded.question_vector,
                              encoded.premise_vectors, self.params,
                              decision_weight=self.decision_weight)
        outcome = result.outcome
        follow_up = None
        if outcome.decision is DecisionLabel.MORE:
            asked = [turn.follow_up_question for turn in history]
            follow_up = qgen.generate(document, asked, self.generator)
        return PredictResult(
            decision=outcome.decision,
            probabilities=outcome.probabilities,
            logits=outcome.logits,
            attention=outcome.attention,
            alignment=result.A,
            entailment=result.E,
            hypotheses=[h.text for h in hypotheses],
            follow_up=follow_up,
        )
