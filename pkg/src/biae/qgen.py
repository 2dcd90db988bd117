"""Follow-up question generation: generation-set construction (natural +
history-reduction augmentation), the serialized input template, and a
deterministic template fallback generator so the dialogue loop runs without
any model download.  Heavier seq2seq generators plug in via the same
contract.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import DecisionLabel, DialogueInstance
from .encoder import tokenize
from .errors import GenerationError, ValidationError
from .segmenter import SegmenterContract, segment_document


@dataclass(frozen=True)
class GenerationInstance:
    document: str
    asked_questions: tuple[str, ...]
    target_question: str


def build_generation_input(document: str, asked_questions: list[str] | tuple[str, ...]) -> str:
    """``document: {D} asked: {f1} | {f2} | ...`` (asked section empty for
    an empty question list)."""
    if not document.strip():
        raise ValidationError("document is empty")
    head = f"document: {document} asked:"
    if not asked_questions:
        return head
    return head + " " + " | ".join(asked_questions)


def natural_generation_set(train: list[DialogueInstance]) -> list[GenerationInstance]:
    """One training sample per instance whose gold decision asks a follow-up:
    the gold answer is the question to generate."""
    return [
        GenerationInstance(
            document=instance.document,
            asked_questions=tuple(t.follow_up_question for t in instance.history),
            target_question=instance.gold_answer,
        )
        for instance in train
        if instance.gold_decision is DecisionLabel.MORE
    ]


def augment(train: list[DialogueInstance]) -> list[GenerationInstance]:
    """History-reduction augmentation: for non-follow-up instances with at
    least one turn, drop the last turn and use its question as the target."""
    samples = []
    for instance in train:
        if instance.gold_decision is DecisionLabel.MORE or not instance.history:
            continue
        questions = [t.follow_up_question for t in instance.history]
        samples.append(GenerationInstance(
            document=instance.document,
            asked_questions=tuple(questions[:-1]),
            target_question=questions[-1],
        ))
    return samples


def write_generation_file(path: str | Path, samples: list[GenerationInstance]) -> None:
    """JSONL training file: one {input_text, target_text} record per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for sample in samples:
            record = {
                "input_text": build_generation_input(sample.document,
                                                     sample.asked_questions),
                "target_text": sample.target_question,
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


class GeneratorContract:
    """Deterministic text generator under a fixed seed/decoding config."""

    name: str = "abstract"
    max_output_length: int = 64

    def generate(self, document: str, asked_questions: list[str]) -> str:
        raise NotImplementedError


_STOPWORDS = {"a", "an", "the", "and", "or", "if", "unless", "when", "to",
              "of", "for", "in", "on", "at", "is", "are", "be", "that"}
_LEADING_CONNECTIVES = re.compile(r"^(?:and|or|if|unless|when|that)\s+", re.IGNORECASE)


def _content_tokens(text: str) -> set[str]:
    return {t for t in tokenize(text) if t.isalnum() and t not in _STOPWORDS}


class TemplateFallbackGenerator(GeneratorContract):
    """Asks about the first document unit not mentioned in any asked
    question.  Deliberately shaped like the extract-then-rewrite baselines;
    ships so the end-to-end loop needs no fine-tuned model.
    """

    name = "template"

    def __init__(self, segmenter: SegmenterContract | None = None):
        self._segmenter = segmenter

    def _unit_candidates(self, document: str) -> list[str]:
        units = [h.text for h in segment_document(document, self._segmenter)]
        # List heads ("You qualify if:") are poor questions; keep them only
        # when nothing else exists.
        non_heads = [u for u in units if not u.rstrip().endswith(":")]
        return non_heads or units

    def generate(self, document: str, asked_questions: list[str]) -> str:
        asked_tokens = [_content_tokens(q) for q in asked_questions]
        candidates = self._unit_candidates(document)
        chosen = None
        for unit in candidates:
            unit_tokens = _content_tokens(unit)
            if unit_tokens and any(unit_tokens <= qt for qt in asked_tokens):
                continue
            chosen = unit
            break
        if chosen is None:
            chosen = candidates[0]
        return self._as_question(chosen)

    def _as_question(self, unit: str) -> str:
        text = _LEADING_CONNECTIVES.sub("", unit.strip().rstrip(".,;:"))
        words = text.split()
        if len(words) > self.max_output_length:
            words = words[: self.max_output_length]
            text = " ".join(words)
        lowered = text.casefold()
        if lowered.startswith("you are "):
            return f"Are you {text[8:]}?"
        if lowered.startswith("you were "):
            return f"Were you {text[9:]}?"
        if lowered.startswith("you have "):
            return f"Have you {text[9:]}?"
        if lowered.startswith("you can "):
            return f"Can you {text[8:]}?"
        if lowered.startswith("you "):
            return f"Do you {text[4:]}?"
        return f"Is it true that {text}?"


def generate(document: str, asked_questions: list[str],
             generator: GeneratorContract) -> str:
    """Run the generator; guarantee a non-empty question ending in '?'."""
    try:
        question = generator.generate(document, list(asked_questions))
    except Exception as exc:
        raise GenerationError(f"generator {generator.name} failed: {exc}") from exc
    question = question.strip()
    if not question:
        raise GenerationError(f"generator {generator.name} returned empty output")
    if not question.endswith("?"):
        question += "?"
    return question
