"""ShARC-format corpus loading, validation, and subset characterization.

Defines the canonical dialogue instance and label model used by every other
module.  Input files are UTF-8 JSON arrays of records with the keys of the
public ShARC distribution (``snippet`` holds the document, ``answer`` the
gold answer).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterator

from .errors import SchemaError, ValidationError


class DecisionLabel(Enum):
    """Four-way dialogue decision.  Enum order is the decision-head class
    order; argmax ties resolve to the lowest index."""

    IRRELEVANT = 0
    YES = 1
    NO = 2
    MORE = 3

    def __str__(self) -> str:
        return self.name


class Answer(Enum):
    """Binary answer a user gives to a follow-up question."""

    YES = "YES"
    NO = "NO"

    @classmethod
    def parse(cls, text: str) -> "Answer":
        norm = text.strip().casefold()
        if norm == "yes":
            return cls.YES
        if norm == "no":
            return cls.NO
        raise ValidationError(f"not a yes/no answer: {text!r}")


@dataclass(frozen=True)
class HistoryTurn:
    follow_up_question: str
    follow_up_answer: Answer

    def __post_init__(self):
        if not self.follow_up_question.strip():
            raise ValidationError("follow_up_question must be non-empty")


@dataclass(frozen=True)
class DialogueInstance:
    """One dialogue example: rule document, initial question, user scenario,
    prior QA turns, and the gold decision/answer."""

    utterance_id: str
    tree_id: str
    source_url: str
    document: str
    question: str
    scenario: str
    history: tuple[HistoryTurn, ...]
    gold_answer: str
    gold_decision: DecisionLabel
    evidence: tuple[Any, ...] = ()
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.document.strip():
            raise ValidationError(f"instance {self.utterance_id}: empty document")
        if not self.question.strip():
            raise ValidationError(f"instance {self.utterance_id}: empty question")


@dataclass(frozen=True)
class SubsetFlags:
    bullet_point: bool
    has_scenario: bool
    has_history: bool


# Line starts with *, -, a bullet glyph, or "1." / "1)" followed by
# whitespace (or nothing, for a bare marker line).
_BULLET_RE = re.compile(r"^\s*(?:[*\-•]|\d+[.)])(?:\s|$)")

_REQUIRED_KEYS = (
    "utterance_id",
    "tree_id",
    "source_url",
    "snippet",
    "question",
    "scenario",
    "history",
    "answer",
    "evidence",
)

_ANSWER_WORDS = {"yes": DecisionLabel.YES, "no": DecisionLabel.NO,
                 "irrelevant": DecisionLabel.IRRELEVANT}


def decision_label_of(gold_answer: str) -> DecisionLabel:
    """Normalize a gold answer string to its decision class.

    "Yes"/"No"/"Irrelevant" (case-insensitive, trimmed) map to their
    classes; any other non-empty string is a follow-up question, i.e. MORE.
    """
    norm = gold_answer.strip()
    if not norm:
        raise ValidationError("gold answer must be non-empty")
    return _ANSWER_WORDS.get(norm.casefold(), DecisionLabel.MORE)


def has_bullet_marker(document: str) -> bool:
    return any(_BULLET_RE.match(line) for line in document.splitlines())


def subset_flags(instance: DialogueInstance) -> SubsetFlags:
    return SubsetFlags(
        bullet_point=has_bullet_marker(instance.document),
        has_scenario=bool(instance.scenario.strip()),
        has_history=len(instance.history) > 0,
    )


def parse_record(raw: dict[str, Any]) -> DialogueInstance:
    """Build a validated instance from one ShARC record."""
    record_id = str(raw.get("utterance_id", "<missing utterance_id>"))
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise SchemaError(record_id, key, "missing required field")

    history = []
    raw_history = raw["history"]
    if not isinstance(raw_history, list):
        raise SchemaError(record_id, "history", "must be an array")
    for turn_index, turn in enumerate(raw_history):
        if not isinstance(turn, dict) or "follow_up_question" not in turn:
            raise SchemaError(record_id, f"history[{turn_index}].follow_up_question",
                              "missing required field")
        if "follow_up_answer" not in turn:
            raise SchemaError(record_id, f"history[{turn_index}].follow_up_answer",
                              "missing required field")
        try:
            history.append(HistoryTurn(
                follow_up_question=str(turn["follow_up_question"]),
                follow_up_answer=Answer.parse(str(turn["follow_up_answer"])),
            ))
        except ValidationError as exc:
            raise SchemaError(record_id, f"history[{turn_index}]", str(exc)) from exc

    if not isinstance(raw["evidence"], list):
        raise SchemaError(record_id, "evidence", "must be an array")

    extra = {k: v for k, v in raw.items() if k not in _REQUIRED_KEYS}
    try:
        return DialogueInstance(
            utterance_id=str(raw["utterance_id"]),
            tree_id=str(raw["tree_id"]),
            source_url=str(raw["source_url"]),
            document=str(raw["snippet"]),
            question=str(raw["question"]),
            scenario=str(raw["scenario"]),
            history=tuple(history),
            gold_answer=str(raw["answer"]),
            gold_decision=decision_label_of(str(raw["answer"])),
            evidence=tuple(raw["evidence"]),
            extra=extra,
        )
    except ValidationError as exc:
        raise SchemaError(record_id, "snippet/question/answer", str(exc)) from exc


def to_record(instance: DialogueInstance) -> dict[str, Any]:
    """Inverse of parse_record for official-format input: field values
    round-trip exactly (answers re-serialize as "Yes"/"No")."""
    return {
        "utterance_id": instance.utterance_id,
        "tree_id": instance.tree_id,
        "source_url": instance.source_url,
        "snippet": instance.document,
        "question": instance.question,
        "scenario": instance.scenario,
        "history": [
            {"follow_up_question": t.follow_up_question,
             "follow_up_answer": t.follow_up_answer.value.capitalize()}
            for t in instance.history
        ],
        "answer": instance.gold_answer,
        "evidence": list(instance.evidence),
        **instance.extra,
    }


def _resolve_split_path(path: str | Path, split: str) -> Path:
    p = Path(path)
    if p.is_dir():
        for candidate in (p / f"sharc_{split}.json", p / "json" / f"sharc_{split}.json"):
            if candidate.exists():
                return candidate
        nested = sorted(p.rglob(f"sharc_{split}.json"))  # e.g. sharc1-official/json/
        if nested:
            return nested[0]
        raise FileNotFoundError(f"no sharc_{split}.json under {p}")
    return p


def load_dataset(path: str | Path, split: str = "train") -> list[DialogueInstance]:
    """Load one split.  ``path`` may be the JSON file itself or a directory
    containing ``sharc_<split>.json`` (optionally under ``json/``)."""
    file_path = _resolve_split_path(path, split)
    with open(file_path, encoding="utf-8") as f:
        records = json.load(f)
    if not isinstance(records, list):
        raise SchemaError("<file>", "<root>", f"{file_path} is not a JSON array")
    return [parse_record(r) for r in records]


def iter_record_errors(path: str | Path, split: str = "train") -> Iterator[tuple[int, str]]:
    """Yield (record index, message) for every malformed record; used by the
    `corpus validate` CLI, which must report all violations, not the first."""
    file_path = _resolve_split_path(path, split)
    with open(file_path, encoding="utf-8") as f:
        records = json.load(f)
    if not isinstance(records, list):
        yield (-1, f"{file_path} is not a JSON array")
        return
    for i, raw in enumerate(records):
        try:
            parse_record(raw)
        except (SchemaError, ValidationError) as exc:
            yield (i, str(exc))
