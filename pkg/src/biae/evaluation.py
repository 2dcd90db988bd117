"""Evaluation harness: run the pipeline over a split, build the metrics
report plus per-instance rows, and compute the per-document entailment
agreement analysis for success/fail prediction partitions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import DecisionLabel, DialogueInstance
from .errors import ValidationError
from .metrics import (EntailmentAnalysis, MetricsReport, agreement_histogram,
                      build_report, constructed_hypothesis_states,
                      predicted_hypothesis_states, state_agreement_fraction,
                      write_histogram_svg)
from .pipeline import PipelinePredictor, PredictResult
from .segmenter import build_premise_set, segment_document, segment_scenario
from .weak_labels import (EmbeddingOracle, align_labels, entailment_labels,
                          labels_from_record)


@dataclass
class EvalRow:
    utterance_id: str
    gold: DecisionLabel
    predicted: DecisionLabel
    gold_question: str
    predicted_question: str


@dataclass
class EvalResult:
    report: MetricsReport
    rows: list[EvalRow]
    predictions: list[PredictResult]


def evaluate(instances: list[DialogueInstance],
             predictor: PipelinePredictor) -> EvalResult:
    if not instances:
        raise ValidationError("no instances to evaluate")
    rows: list[EvalRow] = []
    predictions: list[PredictResult] = []
    decisions: list[DecisionLabel] = []
    questions: list[str] = []
    for instance in instances:
        result = predictor.predict(instance.document, instance.question,
                                   instance.scenario, instance.history)
        predictions.append(result)
        decisions.append(result.decision)
        questions.append(result.follow_up or "")
        rows.append(EvalRow(
            utterance_id=instance.utterance_id,
            gold=instance.gold_decision,
            predicted=result.decision,
            gold_question=instance.gold_answer
            if instance.gold_decision is DecisionLabel.MORE else "",
            predicted_question=result.follow_up or "",
        ))
    report = build_report(instances, decisions, questions)
    return EvalResult(report=report, rows=rows, predictions=predictions)


def write_report_files(result: EvalResult, report_path: str | Path) -> None:
    """Pretty-JSON metrics report plus a flat CSV of per-instance rows."""
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(result.report.to_dict(), indent=2) + "\n",
                           encoding="utf-8")
    csv_path = report_path.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["utterance_id", "gold", "predicted",
                         "gold_question", "predicted_question"])
        for row in result.rows:
            writer.writerow([row.utterance_id, row.gold.name, row.predicted.name,
                             row.gold_question, row.predicted_question])


@dataclass
class AgreementReport:
    success: EntailmentAnalysis | None
    fail: EntailmentAnalysis | None

    def to_dict(self) -> dict:
        def section(analysis: EntailmentAnalysis | None) -> dict | None:
            if analysis is None:
                return None
            payload = analysis.to_dict()
            payload["histogram"] = [
                {"from": lo, "to": hi, "count": count}
                for lo, hi, count in
                agreement_histogram(analysis.agreement_per_document)
            ]
            return payload

        return {"success": section(self.success), "fail": section(self.fail)}


def analyze_entailment(instances: list[DialogueInstance],
                       predictor: PipelinePredictor,
                       oracle: EmbeddingOracle | None = None,
                       label_cache: dict[str, dict] | None = None,
                       svg_path: str | Path | None = None) -> AgreementReport:
    """Per-document agreement between predicted and weak-label hypothesis
    states, partitioned by decision success/failure."""
    partitions: dict[str, list[float]] = {"success": [], "fail": []}
    for instance in instances:
        result = predictor.predict(instance.document, instance.question,
                                   instance.scenario, instance.history)
        if result.alignment.shape[1] == 0:
            continue  # no premises: no entailment reasoning to audit
        record = (label_cache or {}).get(instance.utterance_id)
        if record is not None:
            _, ent_labels = labels_from_record(record)
        else:
            if oracle is None:
                raise ValidationError("need an oracle or a label cache")
            hypotheses = segment_document(instance.document, predictor.segmenter)
            premises = build_premise_set(segment_scenario(instance.scenario),
                                         instance.history)
            hypotheses = hypotheses[: result.alignment.shape[0]]
            alignment = align_labels(hypotheses, premises, oracle)
            ent_labels = entailment_labels(hypotheses, premises, alignment)
        predicted = predicted_hypothesis_states(result.alignment, result.entailment)
        constructed = constructed_hypothesis_states(ent_labels)
        agreement = state_agreement_fraction(predicted, constructed)
        key = "success" if result.decision == instance.gold_decision else "fail"
        partitions[key].append(agreement)

    if svg_path is not None:
        series = {k: v for k, v in partitions.items() if v}
        if series:
            write_histogram_svg(svg_path, series)
    return AgreementReport(
        success=EntailmentAnalysis.from_agreements(partitions["success"])
        if partitions["success"] else None,
        fail=EntailmentAnalysis.from_agreements(partitions["fail"])
        if partitions["fail"] else None,
    )
