"""Decision-model training: example preparation, Adam with a linear
warmup/decay schedule, the batched training loop, and checkpoint I/O.

Runs are bitwise-reproducible under a fixed seed with the toy encoder: all
randomness (parameter init, shuffling, dropout) flows from config.seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import DecisionLabel, DialogueInstance
from .encoder import (EncoderContract, MarkedInput, ToyEncoder, build_input,
                      encoder_from_name)
from .errors import ValidationError
from .segmenter import (SegmenterContract, build_premise_set, segment_document,
                        segment_scenario)
from .weak_labels import (AlignmentLabels, EmbeddingOracle, EntailmentLabels,
                          align_labels, entailment_labels, labels_from_record)
from . import core

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    decision_weight: float = 2.0
    learning_rate: float = 5e-5
    epochs: int = 5
    batch_size: int = 20
    dropout: float = 0.3
    warmup_fraction: float = 0.1
    seed: int = 13
    encoder_name: str = "toy:13:32"

    def __post_init__(self):
        if min(self.decision_weight, self.learning_rate, self.epochs,
               self.batch_size) <= 0:
            raise ValidationError("decision_weight, learning_rate, epochs, "
                                  "batch_size must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout must be in [0, 1)")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValidationError("warmup_fraction must be in [0, 1)")


class Adam:
    """Standard Adam over a named dict of arrays, updated in place."""

    def __init__(self, arrays: dict[str, np.ndarray],
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.arrays = arrays
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, arr in self.arrays.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            arr -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def linear_warmup_schedule(base_lr: float, total_steps: int,
                           warmup_fraction: float):
    """lr ramps linearly to base over the warmup steps, then decays
    linearly to zero."""
    warmup = max(1, int(total_steps * warmup_fraction))

    def lr_at(step: int) -> float:
        if step < warmup:
            return base_lr * (step + 1) / warmup
        if total_steps <= warmup:
            return base_lr
        return base_lr * max(0.0, (total_steps - step) / (total_steps - warmup))

    return lr_at


@dataclass
class PreparedExample:
    """Per-instance tensors and labels, encoder work hoisted out of the
    step loop (for the toy encoder only the affine reruns per step)."""

    utterance_id: str
    gold: DecisionLabel
    marked: MarkedInput
    raw_hyp: np.ndarray    # (m, d) pre-affine rows (or final rows if the
    raw_q: np.ndarray      # encoder has no trainable affine)
    raw_prem: np.ndarray
    alignment: AlignmentLabels
    entailment: EntailmentLabels


def prepare_example(instance: DialogueInstance, encoder: EncoderContract,
                    oracle: EmbeddingOracle | None = None,
                    segmenter: SegmenterContract | None = None,
                    cached_labels: tuple[AlignmentLabels, EntailmentLabels] | None = None,
                    ) -> PreparedExample:
    hypotheses = segment_document(instance.document, segmenter)
    premises = build_premise_set(segment_scenario(instance.scenario),
                                 instance.history)
    marked = build_input(hypotheses, instance.question, premises, encoder)
    if len(marked.hypothesis_marker_positions) < len(hypotheses):
        # Truncation dropped trailing units; labels must match what survived.
        hypotheses = hypotheses[: len(marked.hypothesis_marker_positions)]
        cached_labels = None
    if cached_labels is not None:
        alignment, entailment = cached_labels
    else:
        if oracle is None:
            raise ValidationError(
                f"instance {instance.utterance_id}: no cached labels and no oracle")
        alignment = align_labels(hypotheses, premises, oracle)
        entailment = entailment_labels(hypotheses, premises, alignment)

    if isinstance(encoder, ToyEncoder):
        rows = encoder.encode_raw(marked.tokens)
    else:
        rows = encoder.encode(marked.tokens)
    d = encoder.dim
    return PreparedExample(
        utterance_id=instance.utterance_id,
        gold=instance.gold_decision,
        marked=marked,
        raw_hyp=rows[list(marked.hypothesis_marker_positions)],
        raw_q=rows[marked.question_marker_position],
        raw_prem=rows[list(marked.premise_marker_positions)]
        if marked.premise_marker_positions else np.zeros((0, d)),
        alignment=alignment,
        entailment=entailment,
    )


def prepare_examples(instances: list[DialogueInstance], encoder: EncoderContract,
                     oracle: EmbeddingOracle | None = None,
                     segmenter: SegmenterContract | None = None,
                     label_cache: dict[str, dict] | None = None) -> list[PreparedExample]:
    examples = []
    for instance in instances:
        cached = None
        if label_cache is not None:
            record = label_cache.get(instance.utterance_id)
            if record is None:
                raise ValidationError(
                    f"label cache has no entry for instance {instance.utterance_id}")
            cached = labels_from_record(record)
        examples.append(prepare_example(instance, encoder, oracle, segmenter, cached))
    return examples


@dataclass
class TrainResult:
    parameters: core.BiAEParameters
    encoder: EncoderContract
    loss_curve: list[float]
    config: TrainConfig
    train_accuracy: float
    accuracy_curve: list[tuple[int, float]] = field(default_factory=list)


def _example_rows(example: PreparedExample, encoder: EncoderContract) -> tuple:
    if isinstance(encoder, ToyEncoder):
        return (encoder.apply_affine(example.raw_hyp),
                encoder.apply_affine(example.raw_q),
                encoder.apply_affine(example.raw_prem)
                if example.raw_prem.size else example.raw_prem)
    return example.raw_hyp, example.raw_q, example.raw_prem


def _accuracy(examples: list[PreparedExample], params: core.BiAEParameters,
              encoder: EncoderContract, weight: float) -> float:
    hits = 0
    for example in examples:
        D, uq, U = _example_rows(example, encoder)
        result = core.forward(D, uq, U, params, decision_weight=weight)
        hits += result.outcome.decision == example.gold
    return hits / len(examples)


def train_decision(examples: list[PreparedExample], encoder: EncoderContract,
                   config: TrainConfig,
                   max_steps: int | None = None,
                   track_accuracy_every: int = 0) -> TrainResult:
    """Adam + linear warmup/decay over epochs of shuffled batches.  Loss is
    the batch mean of per-instance joint losses (per-instance terms are
    plain sums, so the decision weight keeps its meaning at any batch
    size)."""
    if not examples:
        raise ValidationError("no training examples")
    rng = np.random.default_rng(config.seed)
    params = core.init_parameters(encoder.dim, seed=config.seed)

    trainable: dict[str, np.ndarray] = dict(params.as_dict())
    toy = isinstance(encoder, ToyEncoder) and encoder.trainable
    if toy:
        trainable["enc.scale"] = encoder.scale
        trainable["enc.shift"] = encoder.shift
    optimizer = Adam(trainable)

    batches_per_epoch = int(np.ceil(len(examples) / config.batch_size))
    total_steps = config.epochs * batches_per_epoch
    if max_steps is not None:
        total_steps = min(total_steps, max_steps)
    lr_at = linear_warmup_schedule(config.learning_rate, total_steps,
                                   config.warmup_fraction)

    loss_curve: list[float] = []
    accuracy_curve: list[tuple[int, float]] = []
    step = 0
    done = False
    for _ in range(config.epochs):
        if done:
            break
        order = rng.permutation(len(examples))
        for b in range(batches_per_epoch):
            batch = [examples[k] for k in
                     order[b * config.batch_size:(b + 1) * config.batch_size]]
            grads = {name: np.zeros_like(arr) for name, arr in trainable.items()}
            batch_loss = 0.0
            for example in batch:
                D, uq, U = _example_rows(example, encoder)
                if config.dropout > 0.0:
                    keep = 1.0 - config.dropout
                    mask_d = (rng.random(D.shape) < keep) / keep
                    mask_q = (rng.random(uq.shape) < keep) / keep
                    mask_u = (rng.random(U.shape) < keep) / keep
                    D, uq, U = D * mask_d, uq * mask_q, U * mask_u
                result = core.forward(
                    D, uq, U, params, gold=example.gold,
                    alignment_labels=example.alignment,
                    entailment_lbls=example.entailment,
                    decision_weight=config.decision_weight)
                grad = core.backward(result, params)
                batch_loss += result.loss
                scale = 1.0 / len(batch)
                for name, g in grad.params.items():
                    grads[name] += g * scale
                if toy:
                    gD, gq, gU = (grad.hyp_vectors, grad.question_vector,
                                  grad.prem_vectors)
                    if config.dropout > 0.0:
                        gD, gq, gU = gD * mask_d, gq * mask_q, gU * mask_u
                    raw = np.vstack([example.raw_hyp, example.raw_q[None, :],
                                     example.raw_prem])
                    grad_rows = np.vstack([gD, gq[None, :], gU])
                    affine = encoder.affine_gradients(raw, grad_rows)
                    grads["enc.scale"] += affine["scale"] * scale
                    grads["enc.shift"] += affine["shift"] * scale

            optimizer.step(grads, lr_at(step))
            loss_curve.append(batch_loss / len(batch))
            step += 1
            if track_accuracy_every and step % track_accuracy_every == 0:
                accuracy_curve.append(
                    (step, _accuracy(examples, params, encoder,
                                     config.decision_weight)))
            if max_steps is not None and step >= max_steps:
                done = True
                break

    return TrainResult(
        parameters=params,
        encoder=encoder,
        loss_curve=loss_curve,
        config=config,
        train_accuracy=_accuracy(examples, params, encoder,
                                 config.decision_weight),
        accuracy_curve=accuracy_curve,
    )


# -- checkpoint I/O -------------------------------------------------------

def config_hash(config: TrainConfig) -> str:
    canonical = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def save_checkpoint(path: str | Path, params: core.BiAEParameters,
                    encoder: EncoderContract, config: TrainConfig,
                    extra: dict | None = None) -> None:
    """Self-describing archive: dimension, named parameter arrays, the
    initialization seed, and a hash of the training config."""
    meta = {
        "format": 1,
        "dim": params.dim,
        "seed": config.seed,
        "encoder": encoder.name,
        "config": asdict(config),
        "config_hash": config_hash(config),
        "hypothesis_marker": "[H]",
    }
    if extra:
        meta.update(extra)
    arrays = {f"core.{k}": v for k, v in params.as_dict().items()}
    if isinstance(encoder, ToyEncoder):
        arrays["enc.scale"] = encoder.scale
        arrays["enc.shift"] = encoder.shift
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(f, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                 **arrays)


def load_checkpoint(path: str | Path) -> tuple[core.BiAEParameters, EncoderContract, dict]:
    with np.load(path) as archive:
        meta = json.loads(archive["meta"].tobytes().decode())
        core_arrays = {k[len("core."):]: archive[k]
                       for k in archive.files if k.startswith("core.")}
        params = core.BiAEParameters.from_dict(core_arrays)
        encoder = encoder_from_name(meta["encoder"])
        if isinstance(encoder, ToyEncoder) and "enc.scale" in archive.files:
            encoder.scale = archive["enc.scale"].astype(float)
            encoder.shift = archive["enc.shift"].astype(float)
    if params.dim != meta["dim"]:
        raise ValidationError(f"checkpoint dim mismatch: {params.dim} != {meta['dim']}")
    return params, encoder, meta
