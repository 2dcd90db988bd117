"""Rule-based segmentation of documents into hypothesis units and of
user-provided information (scenario sentences + dialogue turns) into premises.

The document segmenter is deliberately deterministic and self-contained:
bullet/list markers, sentence boundaries, mid-sentence condition markers
("if", "unless", "when"), and pronoun-led conjuncts inside list items.  The
contract allows swapping in a heavier segmenter without touching callers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .corpus import HistoryTurn
from .errors import ValidationError


@dataclass(frozen=True)
class Hypothesis:
    """One document unit; ``text`` is exactly ``document[start:end]``."""

    index: int
    text: str
    char_span: tuple[int, int]


class PremiseSource(Enum):
    SCENARIO = "SCENARIO"
    TURN = "TURN"


@dataclass(frozen=True)
class Premise:
    index: int
    text: str
    source: PremiseSource
    turn_ref: int | None = None

    def __post_init__(self):
        if self.source is PremiseSource.TURN and self.turn_ref is None:
            raise ValidationError("TURN premise requires turn_ref")
        if self.source is PremiseSource.SCENARIO and self.turn_ref is not None:
            raise ValidationError("SCENARIO premise must not carry turn_ref")


class SegmenterContract:
    """Deterministic document -> hypothesis units."""

    name: str = "abstract"
    version: str = "0"

    def segment(self, document: str) -> list[Hypothesis]:
        raise NotImplementedError


_BULLET_LINE_RE = re.compile(r"^(\s*)(\*|-|•|\d+[.)])(\s+|$)")
_SENT_END_RE = re.compile(r"[.!?]+(?=\s)")
_CLAUSE_MARKER_RE = re.compile(r"\b(?:if|unless|when)\b", re.IGNORECASE)
_CONJUNCT_RE = re.compile(
    r"\b(?:and|or)\s+(?=(?:you|your|they|their|he|she|it|we|i)\b)",
    re.IGNORECASE,
)
_INLINE_COLON_RE = re.compile(r":\s")
_WORD_RE = re.compile(r"\w+")

# Words before a period that do not end a sentence.
_ABBREVIATIONS = {
    "e.g", "i.e", "etc", "mr", "mrs", "ms", "dr", "no", "vs", "cf",
    "st", "u.s", "u.k", "inc", "ltd", "approx", "dept", "min", "max",
}

_LEADING_TRIM = " \t\r\n#"
_TRAILING_TRIM = " \t\r\n,;"


def _trim_span(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start] in _LEADING_TRIM:
        start += 1
    while end > start and text[end - 1] in _TRAILING_TRIM:
        end -= 1
    return start, end


def _word_count_at_least(text: str, start: int, end: int, minimum: int) -> bool:
    count = 0
    for _ in _WORD_RE.finditer(text, start, end):
        count += 1
        if count >= minimum:
            return True
    return minimum == 0


def _is_abbreviation(text: str, punct_start: int) -> bool:
    head = text[:punct_start]
    match = re.search(r"[\w.]+$", head)
    if not match:
        return False
    word = match.group().casefold().rstrip(".")
    if word in _ABBREVIATIONS:
        return True
    # Single-letter initials like "J." never end a sentence.
    return len(word) == 1 and word.isalpha()


def sentence_spans(text: str, start: int = 0, end: int | None = None) -> list[tuple[int, int]]:
    """Whitespace-trimmed sentence spans within text[start:end]."""
    if end is None:
        end = len(text)
    spans: list[tuple[int, int]] = []
    cursor = start
    for match in _SENT_END_RE.finditer(text, start, end):
        if _is_abbreviation(text, match.start()):
            continue
        boundary = match.end()
        s, e = _trim_span(text, cursor, boundary)
        if e > s:
            spans.append((s, e))
        cursor = boundary
    s, e = _trim_span(text, cursor, end)
    if e > s:
        spans.append((s, e))
    return spans


def _clause_spans(text: str, start: int, end: int, list_context: bool) -> list[tuple[int, int]]:
    """Split one sentence-like span into condition-sized units."""
    # The head of a colon-introduced list stays its own unit, colon included.
    colon = _INLINE_COLON_RE.search(text, start, end)
    if colon and _word_count_at_least(text, start, colon.start(), 1):
        head = _trim_span(text, start, colon.start() + 1)
        rest = _clause_spans(text, colon.end(), end, list_context=True)
        return ([head] if head[1] > head[0] else []) + rest

    cuts = [m.start() for m in _CLAUSE_MARKER_RE.finditer(text, start, end)]
    if list_context:
        cuts += [m.start() for m in _CONJUNCT_RE.finditer(text, start, end)]

    spans: list[tuple[int, int]] = []
    seg_start = start
    for pos in sorted(set(cuts)):
        if pos <= seg_start or pos >= end:
            continue
        # Split only when both sides keep real content: at least one word
        # on the left, the marker plus another word on the right (so a bare
        # trailing "if:" never detaches from its head).
        if not _word_count_at_least(text, seg_start, pos, 1):
            continue
        if not _word_count_at_least(text, pos, end, 2):
            continue
        spans.append((seg_start, pos))
        seg_start = pos
    spans.append((seg_start, end))

    trimmed = (_trim_span(text, s, e) for s, e in spans)
    return [(s, e) for s, e in trimmed if e > s]


class RuleSegmenter(SegmenterContract):
    """Default segmenter: bullets, sentences, condition markers.  Lines are
    the top-level blocks (rule documents are line-oriented)."""

    name = "rule"
    version = "1"

    def segment(self, document: str) -> list[Hypothesis]:
        spans: list[tuple[int, int]] = []
        offset = 0
        for line in document.splitlines(keepends=True):
            line_start = offset
            offset += len(line)
            content = line.rstrip("\r\n")
            if not content.strip():
                continue
            bullet = _BULLET_LINE_RE.match(content)
            if bullet:
                item_start = line_start + bullet.end()
                item_end = line_start + len(content)
                spans.extend(_clause_spans(document, item_start, item_end,
                                           list_context=True))
            else:
                for s, e in sentence_spans(document, line_start,
                                           line_start + len(content)):
                    spans.extend(_clause_spans(document, s, e, list_context=False))

        if not spans:
            # Degenerate input (e.g. a bare bullet marker): one unit holding
            # whatever non-whitespace content exists.
            start, end = 0, len(document)
            while start < end and document[start].isspace():
                start += 1
            while end > start and document[end - 1].isspace():
                end -= 1
            spans = [(start, end)]

        return [
            Hypothesis(index=i, text=document[s:e], char_span=(s, e))
            for i, (s, e) in enumerate(spans)
        ]


_DEFAULT_SEGMENTER = RuleSegmenter()


def segment_document(document: str, segmenter: SegmenterContract | None = None) -> list[Hypothesis]:
    """Split a document into hypothesis units (m >= 1)."""
    if not document.strip():
        raise ValidationError("document is empty or whitespace-only")
    units = (segmenter or _DEFAULT_SEGMENTER).segment(document)
    if not units:
        raise ValidationError("segmenter produced no units for a non-empty document")
    return units


def segment_scenario(scenario: str) -> list[str]:
    """Scenario text -> ordered sentences; empty scenario -> []."""
    if not scenario.strip():
        return []
    return [scenario[s:e] for s, e in sentence_spans(scenario)]


def format_turn(turn: HistoryTurn) -> str:
    """Render one QA turn as a premise: ``System: <q> Client: <Yes|No>``."""
    question = re.sub(r"\s+", " ", turn.follow_up_question).strip()
    answer_word = turn.follow_up_answer.value.capitalize()
    return f"System: {question} Client: {answer_word}"


def build_premise_set(scenario_sentences: list[str], turns: list[HistoryTurn] | tuple[HistoryTurn, ...]) -> list[Premise]:
    """Scenario premises first (order kept), then turn premises."""
    premises = [
        Premise(index=i, text=sentence, source=PremiseSource.SCENARIO)
        for i, sentence in enumerate(scenario_sentences)
    ]
    base = len(premises)
    premises.extend(
        Premise(index=base + t, text=format_turn(turn),
                source=PremiseSource.TURN, turn_ref=t)
        for t, turn in enumerate(turns)
    )
    return premises
