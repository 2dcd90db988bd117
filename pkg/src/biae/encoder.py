"""Marked input construction and pluggable text encoding.

The input layout is ``[H] D1 .. [H] Dm [SEP] [CLS] Q [CLS] U1 .. [CLS] Un``;
per-unit vectors are read off at the marker positions.  A deterministic toy
encoder (seeded unit vectors + a trainable per-dimension affine) stands in
for a pre-trained model at desk scale.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalError, ValidationError
from .segmenter import Hypothesis, Premise

logger = logging.getLogger(__name__)

H_MARKER = "[H]"
CLS_MARKER = "[CLS]"
SEP_MARKER = "[SEP]"
SPECIAL_TOKENS = (H_MARKER, CLS_MARKER, SEP_MARKER)

_TOKEN_RE = re.compile(r"\[[A-Z]+\]|\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Whitespace+punctuation tokenizer; lowercases content tokens."""
    return [t if t in SPECIAL_TOKENS else t.casefold()
            for t in _TOKEN_RE.findall(text)]


@dataclass(frozen=True)
class MarkedInput:
    tokens: tuple[str, ...]
    hypothesis_marker_positions: tuple[int, ...]
    question_marker_position: int
    premise_marker_positions: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass
class EncodedDialogue:
    """Per-unit vectors selected at marker positions."""

    hypothesis_vectors: np.ndarray  # (m, d)
    question_vector: np.ndarray     # (d,)
    premise_vectors: np.ndarray     # (n, d)

    @property
    def dim(self) -> int:
        return self.hypothesis_vectors.shape[1]


class EncoderContract:
    """Token sequence -> (L, d) array of finite reals."""

    name: str = "abstract"
    dim: int = 0
    max_length: int = 0
    trainable: bool = False

    def encode(self, tokens: tuple[str, ...]) -> np.ndarray:
        raise NotImplementedError


def build_input(hypotheses: list[Hypothesis], question: str,
                premises: list[Premise], contract: EncoderContract) -> MarkedInput:
    """Assemble the marked token sequence, truncating premise-side content
    first and never dropping markers."""
    if not hypotheses:
        raise ValidationError("at least one hypothesis is required")
    if not question.strip():
        raise ValidationError("question is empty")

    hyp_tokens = [tokenize(h.text) for h in hypotheses]
    question_tokens = tokenize(question)
    premise_tokens = [tokenize(p.text) for p in premises]
    max_length = contract.max_length

    def total_length() -> int:
        return (sum(len(t) + 1 for t in hyp_tokens) + 1
                + 1 + len(question_tokens)
                + sum(len(t) + 1 for t in premise_tokens))

    # Premise content goes first, last premise first; then question content.
    overflow = total_length() - max_length
    if overflow > 0:
        for tokens in reversed(premise_tokens):
            while tokens and overflow > 0:
                tokens.pop()
                overflow -= 1
        while question_tokens and overflow > 0:
            question_tokens.pop()
            overflow -= 1
    if overflow > 0:
        kept = len(hyp_tokens)
        while kept > 1 and total_length() > max_length:
            kept -= 1
            hyp_tokens = hyp_tokens[:kept]
        logger.warning("hypotheses alone exceed max_length=%d; kept %d of %d units",
                       max_length, kept, len(hypotheses))

    tokens: list[str] = []
    hyp_positions: list[int] = []
    for unit in hyp_tokens:
        hyp_positions.append(len(tokens))
        tokens.append(H_MARKER)
        tokens.extend(unit)
    tokens.append(SEP_MARKER)
    question_position = len(tokens)
    tokens.append(CLS_MARKER)
    tokens.extend(question_tokens)
    premise_positions: list[int] = []
    for unit in premise_tokens:
        premise_positions.append(len(tokens))
        tokens.append(CLS_MARKER)
        tokens.extend(unit)

    return MarkedInput(
        tokens=tuple(tokens),
        hypothesis_marker_positions=tuple(hyp_positions),
        question_marker_position=question_position,
        premise_marker_positions=tuple(premise_positions),
    )


def encode(marked: MarkedInput, contract: EncoderContract) -> EncodedDialogue:
    """Run the encoder and select the marker rows."""
    rows = contract.encode(marked.tokens)
    if rows.shape != (marked.length, contract.dim):
        raise InternalError(
            f"encoder {contract.name} returned shape {rows.shape}, "
            f"expected {(marked.length, contract.dim)}")
    return EncodedDialogue(
        hypothesis_vectors=rows[list(marked.hypothesis_marker_positions)],
        question_vector=rows[marked.question_marker_position],
        premise_vectors=rows[list(marked.premise_marker_positions)]
        if marked.premise_marker_positions else np.zeros((0, contract.dim)),
    )


def _seeded_unit_vector(seed: int, token: str, dim: int) -> np.ndarray:
    digest = hashlib.blake2b(f"{seed}:{token}".encode(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class ToyEncoder(EncoderContract):
    """Deterministic desk-scale encoder.

    Content tokens map to seeded unit vectors (fixed per (seed, token)).
    A marker row summarizes the unit that follows it: the normalized mean
    of that unit's token vectors, so different units get different marker
    rows while staying independent of surrounding units.  A trainable
    per-dimension affine (scale, shift) is applied to every row so that
    gradient flow into the encoder can be exercised in tests.
    """

    trainable = True

    def __init__(self, seed: int, dim: int, max_length: int = 4096):
        if dim < 2:
            raise ValidationError("toy encoder needs dim >= 2")
        self.seed = seed
        self.dim = dim
        self.max_length = max_length
        self.name = f"toy:{seed}:{dim}"
        self.scale = np.ones(dim)
        self.shift = np.zeros(dim)
        self._base_cache: dict[str, np.ndarray] = {}

    def _base(self, token: str) -> np.ndarray:
        vec = self._base_cache.get(token)
        if vec is None:
            vec = _seeded_unit_vector(self.seed, token, self.dim)
            self._base_cache[token] = vec
        return vec

    def encode_raw(self, tokens: tuple[str, ...]) -> np.ndarray:
        """Pre-affine rows; cached by trainers so only the affine reruns."""
        length = len(tokens)
        rows = np.empty((length, self.dim))
        for t, token in enumerate(tokens):
            rows[t] = self._base(token)
        for t, token in enumerate(tokens):
            if token not in (H_MARKER, CLS_MARKER):
                continue
            segment = []
            for follow in tokens[t + 1:]:
                if follow in SPECIAL_TOKENS:
                    break
                segment.append(self._base(follow))
            if segment:
                mean = np.mean(segment, axis=0)
                norm = np.linalg.norm(mean)
                if norm > 1e-12:
                    rows[t] = mean / norm
        return rows

    def apply_affine(self, raw: np.ndarray) -> np.ndarray:
        return raw * self.scale + self.shift

    def affine_gradients(self, raw: np.ndarray, grad_rows: np.ndarray) -> dict[str, np.ndarray]:
        """Backprop through ``scale * raw + shift`` for the given rows."""
        return {"scale": (grad_rows * raw).sum(axis=0),
                "shift": grad_rows.sum(axis=0)}

    def parameters(self) -> dict[str, np.ndarray]:
        return {"scale": self.scale, "shift": self.shift}

    def encode(self, tokens: tuple[str, ...]) -> np.ndarray:
        return self.apply_affine(self.encode_raw(tokens))


def encoder_from_name(name: str) -> EncoderContract:
    """``toy:<seed>:<d>`` selects the toy encoder."""
    parts = name.split(":")
    if parts[0] == "toy" and len(parts) == 3:
        return ToyEncoder(seed=int(parts[1]), dim=int(parts[2]))
    raise ValidationError(f"unknown encoder: {name!r}")
