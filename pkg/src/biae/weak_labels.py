"""Weakly supervised alignment and entailment labels.

Each premise is aligned to the hypothesis with maximal embedding cosine
similarity (ties to the smallest index).  Aligned pairs get ENTAILMENT or
CONTRADICTION from the turn's answer polarity (scenario sentences assert
facts, so ENTAILMENT); every other pair in a labeled premise's column is
NEUTRAL and trained explicitly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .encoder import tokenize
from .errors import InternalError, ValidationError
from .segmenter import Hypothesis, Premise, PremiseSource


class EntailmentState(Enum):
    ENTAILMENT = 0
    CONTRADICTION = 1
    NEUTRAL = 2

    def short(self) -> str:
        return {"ENTAILMENT": "E", "CONTRADICTION": "C", "NEUTRAL": "N"}[self.name]

    @classmethod
    def from_short(cls, code: str) -> "EntailmentState":
        return {"E": cls.ENTAILMENT, "C": cls.CONTRADICTION, "N": cls.NEUTRAL}[code]


class EmbeddingOracle:
    """text -> unit-norm vector, deterministic per (name, text)."""

    name: str = "abstract"
    dimension: int = 0

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


class HashEmbeddingOracle(EmbeddingOracle):
    """Bag of seeded token unit vectors, normalized.  Shared tokens push
    cosine similarity up, which is all the weak alignment needs."""

    def __init__(self, seed: int, dimension: int):
        if dimension < 2:
            raise ValidationError("embedding dimension must be >= 2")
        self.seed = seed
        self.dimension = dimension
        self.name = f"hash:{seed}:{dimension}"
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}:{token}".encode(),
                                     digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            tokens = ["<empty>"]
        total = np.sum([self._token_vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(total)
        if norm < 1e-12:
            return self._token_vector("<degenerate>")
        return total / norm


def embedding_oracle(name: str) -> EmbeddingOracle:
    """``hash:<seed>:<dim>`` selects the hashed bag-of-words oracle."""
    parts = name.split(":")
    if parts[0] == "hash" and len(parts) == 3:
        return HashEmbeddingOracle(seed=int(parts[1]), dimension=int(parts[2]))
    raise ValidationError(f"unknown embedding oracle: {name!r}")


@dataclass(frozen=True)
class AlignmentLabels:
    premise_to_hypothesis: dict[int, int]
    row_targets: dict[int, np.ndarray]  # hypothesis index -> distribution over n
    n_premises: int

    def target_arrays(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """(mask over rows, (m, n) target matrix) for loss computation."""
        mask = np.zeros(m, dtype=bool)
        targets = np.zeros((m, self.n_premises))
        for i, row in self.row_targets.items():
            if i < m:
                mask[i] = True
                targets[i] = row
        return mask, targets


@dataclass(frozen=True)
class EntailmentLabels:
    pair_labels: dict[tuple[int, int], EntailmentState]
    labeled_pairs: frozenset[tuple[int, int]]
    m: int
    n: int

    def target_matrix(self) -> np.ndarray:
        """(m, n) int matrix of state indices; -1 where unlabeled."""
        targets = np.full((self.m, self.n), -1, dtype=np.int64)
        for (i, j), state in self.pair_labels.items():
            targets[i, j] = state.value
        return targets


def _embed_rows(texts: list[str], oracle: EmbeddingOracle) -> np.ndarray:
    rows = np.zeros((len(texts), oracle.dimension))
    for k, text in enumerate(texts):
        vec = np.asarray(oracle.embed(text), dtype=float)
        if vec.shape != (oracle.dimension,):
            raise InternalError(
                f"oracle {oracle.name} returned shape {vec.shape}, "
                f"expected ({oracle.dimension},)")
        rows[k] = vec
    return rows


def align_labels(hypotheses: list[Hypothesis], premises: list[Premise],
                 oracle: EmbeddingOracle) -> AlignmentLabels:
    """Cosine-similarity argmax alignment of every premise to a hypothesis."""
    if not hypotheses:
        raise ValidationError("need at least one hypothesis")
    if not premises:
        return AlignmentLabels({}, {}, 0)

    hyp = _embed_rows([h.text for h in hypotheses], oracle)
    prem = _embed_rows([p.text for p in premises], oracle)
    hyp_norms = np.maximum(np.linalg.norm(hyp, axis=1), 1e-12)
    prem_norms = np.maximum(np.linalg.norm(prem, axis=1), 1e-12)

    # Plain per-pair dots: duplicate texts must yield *exactly* equal
    # similarities so the smallest-index tie-break is deterministic.
    mapping = {}
    for j in range(len(premises)):
        sims = np.array([float(np.dot(hyp[i], prem[j])) / (hyp_norms[i] * prem_norms[j])
                         for i in range(len(hypotheses))])
        mapping[j] = int(np.argmax(sims))

    grouped: dict[int, list[int]] = {}
    for j, i in mapping.items():
        grouped.setdefault(i, []).append(j)
    row_targets = {}
    for i, member_premises in grouped.items():
        row = np.zeros(len(premises))
        row[member_premises] = 1.0 / len(member_premises)
        row_targets[i] = row
    return AlignmentLabels(mapping, row_targets, len(premises))


def _turn_polarity(text: str) -> EntailmentState:
    if text.endswith("Client: Yes"):
        return EntailmentState.ENTAILMENT
    if text.endswith("Client: No"):
        return EntailmentState.CONTRADICTION
    raise InternalError(f"turn premise missing Client suffix: {text!r}")


def entailment_labels(hypotheses: list[Hypothesis], premises: list[Premise],
                      alignment: AlignmentLabels) -> EntailmentLabels:
    """Three-state labels over full columns of the labeled premises."""
    m, n = len(hypotheses), len(premises)
    pair_labels: dict[tuple[int, int], EntailmentState] = {}
    for premise in premises:
        j = premise.index
        if j not in alignment.premise_to_hypothesis:
            raise ValidationError(f"alignment does not cover premise {j}")
        aligned = alignment.premise_to_hypothesis[j]
        if premise.source is PremiseSource.SCENARIO:
            state = EntailmentState.ENTAILMENT
        else:
            state = _turn_polarity(premise.text)
        for i in range(m):
            pair_labels[(i, j)] = state if i == aligned else EntailmentState.NEUTRAL
    return EntailmentLabels(
        pair_labels=pair_labels,
        labeled_pairs=frozenset(pair_labels),
        m=m,
        n=n,
    )


def agreement_rate(predicted: AlignmentLabels, gold: dict[int, int]) -> float:
    """Fraction of gold-covered premises where the prediction matches."""
    if not gold:
        raise ValidationError("gold mapping is empty; agreement rate undefined")
    hits = sum(1 for j, i in gold.items()
               if predicted.premise_to_hypothesis.get(j) == i)
    return hits / len(gold)


# -- label cache --------------------------------------------------------

def cache_record(utterance_id: str, oracle_name: str,
                 alignment: AlignmentLabels, entailment: EntailmentLabels) -> dict:
    non_neutral = sorted(
        [i, j, state.short()]
        for (i, j), state in entailment.pair_labels.items()
        if state is not EntailmentState.NEUTRAL
    )
    return {
        "utterance_id": utterance_id,
        "oracle": oracle_name,
        "m": entailment.m,
        "n": entailment.n,
        "premise_to_hypothesis": {str(j): i for j, i
                                  in sorted(alignment.premise_to_hypothesis.items())},
        "pair_labels": non_neutral,
    }


def labels_from_record(record: dict) -> tuple[AlignmentLabels, EntailmentLabels]:
    """Rebuild both label structures from a cache record (NEUTRAL pairs are
    implied by the full-column convention)."""
    m, n = record["m"], record["n"]
    mapping = {int(j): int(i) for j, i in record["premise_to_hypothesis"].items()}
    grouped: dict[int, list[int]] = {}
    for j, i in mapping.items():
        grouped.setdefault(i, []).append(j)
    row_targets = {}
    for i, members in grouped.items():
        row = np.zeros(n)
        row[members] = 1.0 / len(members)
        row_targets[i] = row
    alignment = AlignmentLabels(mapping, row_targets, n)

    pair_labels: dict[tuple[int, int], EntailmentState] = {
        (i, j): EntailmentState.NEUTRAL for j in mapping for i in range(m)
    }
    for i, j, code in record["pair_labels"]:
        pair_labels[(int(i), int(j))] = EntailmentState.from_short(code)
    entailment = EntailmentLabels(pair_labels, frozenset(pair_labels), m, n)
    return alignment, entailment


def write_label_cache(path: str | Path, records: list[dict]) -> None:
    """One JSON record per line; atomic replace so readers never see a
    half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    os.replace(tmp, path)


def read_label_cache(path: str | Path) -> dict[str, dict]:
    cache: dict[str, dict] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                record = json.loads(line)
                cache[record["utterance_id"]] = record
    return cache
