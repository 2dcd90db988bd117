"""Evaluation metrics: micro/macro accuracy, class-wise recall, corpus BLEU
with conditional filtering, subset breakdowns, and per-document entailment
agreement statistics.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import DecisionLabel, DialogueInstance, subset_flags
from .errors import ValidationError
from .weak_labels import EntailmentLabels, EntailmentState

BLEU_PRECISION_EPS = 1e-9  # smoothing for zero n-gram counts


def micro_macro(predictions: list[DecisionLabel],
                golds: list[DecisionLabel]) -> tuple[float, float]:
    """Micro = fraction correct; macro = unweighted mean of per-class
    recalls over the classes present in the golds."""
    recalls = class_wise(predictions, golds)
    correct = sum(1 for p, g in zip(predictions, golds) if p == g)
    micro = correct / len(golds)
    macro = sum(recalls.values()) / len(recalls)
    return micro, macro


def class_wise(predictions: list[DecisionLabel],
               golds: list[DecisionLabel]) -> dict[DecisionLabel, float]:
    """Per-class recall; classes absent from the golds are omitted."""
    if not golds:
        raise ValidationError("empty prediction/gold lists")
    if len(predictions) != len(golds):
        raise ValidationError("predictions and golds differ in length")
    totals: Counter[DecisionLabel] = Counter(golds)
    hits: Counter[DecisionLabel] = Counter(
        g for p, g in zip(predictions, golds) if p == g)
    return {label: hits[label] / totals[label] for label in DecisionLabel
            if totals[label] > 0}


def _ngrams(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(candidates: list[str], references: list[str],
                max_order: int = 4) -> dict[int, float]:
    """Corpus-level BLEU-1..BLEU-max_order on a 0-100 scale.

    Uniform n-gram weights, standard brevity penalty, and epsilon-floored
    modified precisions so zero-overlap corpora score ~0 rather than
    raising.  Tokenization is whitespace splitting.
    """
    if len(candidates) != len(references):
        raise ValidationError("candidates and references differ in length")
    matches = np.zeros(max_order)
    totals = np.zeros(max_order)
    candidate_length = 0
    reference_length = 0
    for candidate, reference in zip(candidates, references):
        cand_tokens = candidate.split()
        ref_tokens = reference.split()
        candidate_length += len(cand_tokens)
        reference_length += len(ref_tokens)
        for order in range(1, max_order + 1):
            cand_counts = _ngrams(cand_tokens, order)
            ref_counts = _ngrams(ref_tokens, order)
            totals[order - 1] += sum(cand_counts.values())
            matches[order - 1] += sum(min(count, ref_counts[gram])
                                      for gram, count in cand_counts.items())

    precisions = np.where((matches > 0) & (totals > 0),
                          matches / np.maximum(totals, 1),
                          BLEU_PRECISION_EPS)
    if candidate_length == 0:
        brevity = 0.0
    elif candidate_length > reference_length:
        brevity = 1.0
    else:
        brevity = float(np.exp(1.0 - reference_length / candidate_length))

    scores = {}
    for order in range(1, max_order + 1):
        log_mean = float(np.mean(np.log(precisions[:order])))
        scores[order] = 100.0 * brevity * float(np.exp(log_mean))
    return scores


def conditional_bleu(pred_decisions: list[DecisionLabel],
                     gold_decisions: list[DecisionLabel],
                     pred_questions: list[str],
                     gold_questions: list[str]) -> dict[int, float]:
    """BLEU over exactly the indices where both the predicted and the gold
    decision ask for a follow-up; empty index set -> {} (scores absent)."""
    lengths = {len(pred_decisions), len(gold_decisions),
               len(pred_questions), len(gold_questions)}
    if len(lengths) != 1:
        raise ValidationError("conditional_bleu inputs differ in length")
    kept = [k for k in range(len(pred_decisions))
            if pred_decisions[k] == DecisionLabel.MORE
            and gold_decisions[k] == DecisionLabel.MORE]
    if not kept:
        return {}
    return corpus_bleu([pred_questions[k] for k in kept],
                       [gold_questions[k] for k in kept])


# -- subset breakdown -----------------------------------------------------

SUBSET_NAMES = ("bullet_point", "regular", "scenario", "no_scenario",
                "history", "no_history", "all")


def subset_partition(instances: list[DialogueInstance]) -> dict[str, list[int]]:
    members: dict[str, list[int]] = {name: [] for name in SUBSET_NAMES}
    for k, instance in enumerate(instances):
        flags = subset_flags(instance)
        members["bullet_point" if flags.bullet_point else "regular"].append(k)
        members["scenario" if flags.has_scenario else "no_scenario"].append(k)
        members["history" if flags.has_history else "no_history"].append(k)
        members["all"].append(k)
    return members


@dataclass
class MetricsReport:
    micro_accuracy: float
    macro_accuracy: float
    class_wise: dict[str, float]
    bleu: dict[int, float]
    subset_micro: dict[str, float]
    subset_macro: dict[str, float]
    counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "micro_accuracy": self.micro_accuracy,
            "macro_accuracy": self.macro_accuracy,
            "class_wise": self.class_wise,
            "bleu": {str(k): v for k, v in self.bleu.items()},
            "subset_micro": self.subset_micro,
            "subset_macro": self.subset_macro,
            "counts": self.counts,
        }


def build_report(instances: list[DialogueInstance],
                 predictions: list[DecisionLabel],
                 pred_questions: list[str] | None = None) -> MetricsReport:
    golds = [instance.gold_decision for instance in instances]
    micro, macro = micro_macro(predictions, golds)
    members = subset_partition(instances)
    subset_micro, subset_macro, counts = {}, {}, {}
    for name, idx in members.items():
        counts[name] = len(idx)
        if idx:
            sm, sM = micro_macro([predictions[k] for k in idx],
                                 [golds[k] for k in idx])
            subset_micro[name], subset_macro[name] = sm, sM
    bleu: dict[int, float] = {}
    if pred_questions is not None:
        bleu = conditional_bleu(predictions, golds, pred_questions,
                                [instance.gold_answer for instance in instances])
    return MetricsReport(
        micro_accuracy=micro,
        macro_accuracy=macro,
        class_wise={label.name: recall
                    for label, recall in class_wise(predictions, golds).items()},
        bleu=bleu,
        subset_micro=subset_micro,
        subset_macro=subset_macro,
        counts=counts,
    )


# -- entailment agreement (per-document correctness of state reasoning) ---

def predicted_hypothesis_states(A: np.ndarray, E: np.ndarray) -> list[EntailmentState]:
    """Aggregate pair states into one state per hypothesis: argmax over the
    alignment-weighted state mass; exact ties resolve to NEUTRAL."""
    m = A.shape[0]
    if A.shape[1] == 0:
        return [EntailmentState.NEUTRAL] * m
    mass = np.einsum("ij,ijk->ik", A, E)  # (m, 3)
    states = []
    for i in range(m):
        best = mass[i].max()
        winners = np.nonzero(mass[i] == best)[0]
        states.append(EntailmentState(int(winners[0])) if len(winners) == 1
                      else EntailmentState.NEUTRAL)
    return states


def constructed_hypothesis_states(labels: EntailmentLabels) -> list[EntailmentState]:
    """Weak-label state per hypothesis: the non-neutral label of any premise
    aligned to it; CONTRADICTION dominates ENTAILMENT on conflict."""
    states = [EntailmentState.NEUTRAL] * labels.m
    for (i, j), state in labels.pair_labels.items():
        if state is EntailmentState.NEUTRAL:
            continue
        if states[i] is EntailmentState.NEUTRAL or state is EntailmentState.CONTRADICTION:
            states[i] = state
    return states


def state_agreement_fraction(predicted: list[EntailmentState],
                             constructed: list[EntailmentState]) -> float:
    """Fraction of hypotheses whose predicted state matches the weak label."""
    if not predicted or len(predicted) != len(constructed):
        raise ValidationError("state lists must be non-empty and equal length")
    hits = sum(1 for p, c in zip(predicted, constructed) if p == c)
    return hits / len(predicted)


def perfect_agreement_rate(fractions: list[float]) -> float:
    """Share of documents whose agreement fraction is exactly 1.0."""
    if not fractions:
        raise ValidationError("empty agreement list")
    return sum(1 for a in fractions if a == 1.0) / len(fractions)


@dataclass
class EntailmentAnalysis:
    agreement_per_document: list[float]
    perfect_rate: float
    mean_agreement: float
    variance_agreement: float
    quartiles: tuple[float, float, float]

    @classmethod
    def from_agreements(cls, fractions: list[float]) -> "EntailmentAnalysis":
        arr = np.asarray(fractions, dtype=float)
        q1, q2, q3 = np.percentile(arr, [25, 50, 75])
        return cls(
            agreement_per_document=list(fractions),
            perfect_rate=perfect_agreement_rate(fractions),
            mean_agreement=float(arr.mean()),
            variance_agreement=float(arr.var()),
            quartiles=(float(q1), float(q2), float(q3)),
        )

    def to_dict(self) -> dict:
        return {
            "count": len(self.agreement_per_document),
            "perfect_rate": self.perfect_rate,
            "mean_agreement": self.mean_agreement,
            "variance_agreement": self.variance_agreement,
            "quartiles": list(self.quartiles),
        }


def agreement_histogram(fractions: list[float], bins: int = 10) -> list[tuple[float, float, int]]:
    counts, edges = np.histogram(np.asarray(fractions), bins=bins, range=(0.0, 1.0))
    return [(float(edges[k]), float(edges[k + 1]), int(counts[k]))
            for k in range(bins)]


def write_histogram_svg(path: str | Path,
                        series: dict[str, list[float]], bins: int = 10) -> None:
    """Grouped bar chart of agreement distributions; plain hand-rolled SVG."""
    width, height, margin = 640, 360, 40
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    histograms = {name: agreement_histogram(vals, bins) for name, vals in series.items()}
    peak = max((c for hist in histograms.values() for _, _, c in hist), default=1) or 1
    colors = ["#4878a8", "#d1605e", "#6aa56e", "#b8850a"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    group_w = plot_w / bins
    bar_w = group_w / max(len(histograms), 1) * 0.8
    for s, (name, hist) in enumerate(histograms.items()):
        color = colors[s % len(colors)]
        for k, (_, _, count) in enumerate(hist):
            bar_h = plot_h * count / peak
            x = margin + k * group_w + s * bar_w + group_w * 0.1
            y = margin + plot_h - bar_h
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                         f'height="{bar_h:.1f}" fill="{color}"/>')
        parts.append(f'<text x="{margin + 8 + s * 120}" y="{margin - 10}" '
                     f'fill="{color}" font-size="13">{name}</text>')
    for k in range(bins + 1):
        x = margin + k * group_w
        parts.append(f'<text x="{x - 8:.1f}" y="{height - margin + 16}" '
                     f'font-size="10">{k / bins:.1f}</text>')
    parts.append(f'<line x1="{margin}" y1="{margin + plot_h}" x2="{margin + plot_w}" '
                 f'y2="{margin + plot_h}" stroke="black"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
