"""The bipartite-alignment + entailment decision module.

Float64 numpy throughout.  The forward pass is:

  alignment   A_ij   = row-softmax( align_w . [d_i; u_j] + align_b )
  entailment  E_ij   = softmax( entail_w . [d_i; u_j; d_i-u_j; d_i*u_j] + entail_b )
  state mix   e_i    = sum_j A_ij * sum_K E_ij^K * state_K        (convex in states)
  attention   a      = softmax( attn_w . [d_i; e_i] + attn_b )
  summary     s      = sum_i a_i [d_i; e_i]
  decision    p      = decision_w . [u_q; s] + decision_b

with joint loss  w * CE(softmax(p), gold) + sum_i CE(A_i, align target_i)
+ sum_(i,j) CE(E_ij, entail target_ij).  ``backward`` returns hand-derived
analytic gradients for every parameter group and for the input vectors; the
test suite checks them against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import DecisionLabel
from .errors import ValidationError
from .weak_labels import AlignmentLabels, EntailmentLabels

PROB_EPS = 1e-12  # clamp inside cross-entropy; guards one-hot extremes

STATE_ORDER = ("ENTAILMENT", "CONTRADICTION", "NEUTRAL")


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _softmax_vjp(p: np.ndarray, grad_p: np.ndarray, axis: int = -1) -> np.ndarray:
    """d(loss)/d(logits) given d(loss)/d(softmax output)."""
    inner = (p * grad_p).sum(axis=axis, keepdims=True)
    return p * (grad_p - inner)


def cross_entropy(predicted: np.ndarray, target: np.ndarray) -> float:
    """-sum_k target_k ln(max(predicted_k, eps))."""
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    if predicted.shape != target.shape:
        raise ValidationError(
            f"length mismatch: predicted {predicted.shape}, target {target.shape}")
    for name, vec in (("predicted", predicted), ("target", target)):
        if np.any(vec < 0):
            raise ValidationError(f"{name} has negative entries")
        if abs(vec.sum() - 1.0) > 1e-6:
            raise ValidationError(f"{name} does not sum to 1 (got {vec.sum()})")
    return float(-(target * np.log(np.maximum(predicted, PROB_EPS))).sum())


@dataclass
class BiAEParameters:
    """All trainable parameters of the decision module (31d + 9 scalars)."""

    align_w: np.ndarray      # (2d,)
    align_b: np.ndarray      # (1,)
    entail_w: np.ndarray     # (3, 4d)
    entail_b: np.ndarray     # (3,)
    state_vectors: np.ndarray  # (3, d), rows in STATE_ORDER
    attn_w: np.ndarray       # (2d,)
    attn_b: np.ndarray       # (1,)
    decision_w: np.ndarray   # (4, 3d)
    decision_b: np.ndarray   # (4,)

    @property
    def dim(self) -> int:
        return self.state_vectors.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "align_w": self.align_w, "align_b": self.align_b,
            "entail_w": self.entail_w, "entail_b": self.entail_b,
            "state_vectors": self.state_vectors,
            "attn_w": self.attn_w, "attn_b": self.attn_b,
            "decision_w": self.decision_w, "decision_b": self.decision_b,
        }

    @classmethod
    def from_dict(cls, arrays: dict[str, np.ndarray]) -> "BiAEParameters":
        return cls(**{k: np.asarray(arrays[k], dtype=float) for k in
                      cls.__dataclass_fields__ if k in arrays})


def parameter_count(d: int) -> int:
    """Closed form: (2d+1) + (12d+3) + 3d + (2d+1) + (12d+4) = 31d + 9."""
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    return 31 * d + 9


def count_parameters(params: BiAEParameters) -> int:
    return sum(int(a.size) for a in params.as_dict().values())


def init_parameters(d: int, seed: int) -> BiAEParameters:
    """Fan-average uniform weights, zero biases, unit-norm state vectors."""
    rng = np.random.default_rng(seed)

    def glorot(shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    states = rng.standard_normal((3, d))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    return BiAEParameters(
        align_w=glorot((2 * d,), 2 * d, 1),
        align_b=np.zeros(1),
        entail_w=glorot((3, 4 * d), 4 * d, 3),
        entail_b=np.zeros(3),
        state_vectors=states,
        attn_w=glorot((2 * d,), 2 * d, 1),
        attn_b=np.zeros(1),
        decision_w=glorot((4, 3 * d), 3 * d, 4),
        decision_b=np.zeros(4),
    )


@dataclass
class DecisionOutcome:
    logits: np.ndarray          # (4,)
    probabilities: np.ndarray   # (4,)
    decision: DecisionLabel
    attention: np.ndarray | None = None      # (m,)
    summary: np.ndarray | None = None        # (2d,)
    state_vectors: np.ndarray | None = None  # (m, d)


# -- forward operations --------------------------------------------------

def alignment_scores(hyp_vectors: np.ndarray, prem_vectors: np.ndarray,
                     params: BiAEParameters) -> np.ndarray:
    """Row-stochastic (m, n) alignment matrix; (m, 0) when there are no
    premises (callers treat the empty matrix as "no premises")."""
    m, d = hyp_vectors.shape
    n = prem_vectors.shape[0]
    if n == 0:
        return np.zeros((m, 0))
    w_d, w_u = params.align_w[:d], params.align_w[d:]
    raw = (hyp_vectors @ w_d)[:, None] + (prem_vectors @ w_u)[None, :] + params.align_b[0]
    return softmax(raw, axis=1)


def alignment_loss(A: np.ndarray, labels: AlignmentLabels) -> float:
    """Sum of row cross-entropies for rows that have a target."""
    m = A.shape[0]
    total = 0.0
    for i, target in labels.row_targets.items():
        if i < m:
            total += cross_entropy(A[i], target)
    return total


def pair_features(hyp_vectors: np.ndarray, prem_vectors: np.ndarray) -> np.ndarray:
    """(m, n, 4d) concatenation / difference / product features."""
    m, d = hyp_vectors.shape
    n = prem_vectors.shape[0]
    D = np.broadcast_to(hyp_vectors[:, None, :], (m, n, d))
    U = np.broadcast_to(prem_vectors[None, :, :], (m, n, d))
    return np.concatenate([D, U, D - U, D * U], axis=2)


def entailment_probs(hyp_vectors: np.ndarray, prem_vectors: np.ndarray,
                     params: BiAEParameters) -> np.ndarray:
    """(m, n, 3) state probabilities per hypothesis-premise pair."""
    m = hyp_vectors.shape[0]
    n = prem_vectors.shape[0]
    if n == 0:
        return np.zeros((m, 0, 3))
    logits = pair_features(hyp_vectors, prem_vectors) @ params.entail_w.T + params.entail_b
    return softmax(logits, axis=2)


def state_mixture(A: np.ndarray, E: np.ndarray,
                  params: BiAEParameters) -> tuple[np.ndarray, np.ndarray]:
    """Per-hypothesis state coefficients (m, 3) and mixed vectors (m, d)."""
    m = A.shape[0]
    if A.shape[1] == 0:
        return np.zeros((m, 3)), np.zeros((m, params.dim))
    coeffs = np.einsum("ij,ijk->ik", A, E)
    return coeffs, coeffs @ params.state_vectors


def entailment_state_vectors(A: np.ndarray, E: np.ndarray,
                             params: BiAEParameters) -> np.ndarray:
    """e_i: alignment-and-probability weighted mix of the state vectors;
    zero vectors when there are no premises."""
    return state_mixture(A, E, params)[1]


def entailment_loss(E: np.ndarray, labels: EntailmentLabels) -> float:
    """Sum of cross-entropies against one-hot states over labeled pairs."""
    if not labels.pair_labels:
        return 0.0
    targets = labels.target_matrix()
    i_idx, j_idx = np.nonzero(targets >= 0)
    picked = E[i_idx, j_idx, targets[i_idx, j_idx]]
    return float(-np.log(np.maximum(picked, PROB_EPS)).sum())


def document_summary(hyp_vectors: np.ndarray, state_vecs: np.ndarray,
                     params: BiAEParameters) -> tuple[np.ndarray, np.ndarray]:
    """Attention over hypotheses and the pooled (2d,) document summary."""
    h = np.concatenate([hyp_vectors, state_vecs], axis=1)
    raw = h @ params.attn_w + params.attn_b[0]
    attention = softmax(raw)
    return attention, attention @ h


def decision_logits(question_vector: np.ndarray, summary: np.ndarray,
                    params: BiAEParameters,
                    attention: np.ndarray | None = None,
                    state_vecs: np.ndarray | None = None) -> DecisionOutcome:
    """Four-way decision head; argmax ties resolve to the lowest class."""
    x = np.concatenate([question_vector, summary])
    logits = params.decision_w @ x + params.decision_b
    probabilities = softmax(logits)
    return DecisionOutcome(
        logits=logits,
        probabilities=probabilities,
        decision=DecisionLabel(int(np.argmax(logits))),
        attention=attention,
        summary=summary,
        state_vectors=state_vecs,
    )


def decision_loss(outcome: DecisionOutcome, gold: DecisionLabel) -> float:
    return float(-np.log(np.maximum(outcome.probabilities[gold.value], PROB_EPS)))


def joint_loss(l_dec: float, l_align: float, l_entail: float,
               decision_weight: float) -> float:
    if decision_weight <= 0:
        raise ValidationError("decision weight must be positive")
    return decision_weight * l_dec + l_align + l_entail


# -- fused forward/backward for training ---------------------------------

@dataclass
class ForwardResult:
    """Everything the backward pass and the service need."""

    loss: float
    loss_decision: float
    loss_alignment: float
    loss_entailment: float
    outcome: DecisionOutcome
    A: np.ndarray
    E: np.ndarray
    # cached intermediates
    hyp_vectors: np.ndarray = field(repr=False, default=None)
    question_vector: np.ndarray = field(repr=False, default=None)
    prem_vectors: np.ndarray = field(repr=False, default=None)
    coeffs: np.ndarray = field(repr=False, default=None)
    gold: DecisionLabel | None = None
    align_mask: np.ndarray | None = field(repr=False, default=None)
    align_targets: np.ndarray | None = field(repr=False, default=None)
    entail_targets: np.ndarray | None = field(repr=False, default=None)
    decision_weight: float = 2.0


def forward(hyp_vectors: np.ndarray, question_vector: np.ndarray,
            prem_vectors: np.ndarray, params: BiAEParameters,
            gold: DecisionLabel | None = None,
            alignment_labels: AlignmentLabels | None = None,
            entailment_lbls: EntailmentLabels | None = None,
            decision_weight: float = 2.0) -> ForwardResult:
    """Full forward pass; losses are zero for whichever labels are absent."""
    D = np.asarray(hyp_vectors, dtype=float)
    uq = np.asarray(question_vector, dtype=float)
    U = np.asarray(prem_vectors, dtype=float)
    m = D.shape[0]

    A = alignment_scores(D, U, params)
    E = entailment_probs(D, U, params)
    coeffs, state_vecs = state_mixture(A, E, params)
    attention, summary = document_summary(D, state_vecs, params)
    outcome = decision_logits(uq, summary, params, attention, state_vecs)

    l_dec = decision_loss(outcome, gold) if gold is not None else 0.0
    align_mask = align_targets = entail_targets = None
    l_align = 0.0
    if alignment_labels is not None and U.shape[0] > 0:
        align_mask, align_targets = alignment_labels.target_arrays(m)
        l_align = alignment_loss(A, alignment_labels)
    l_entail = 0.0
    if entailment_lbls is not None and U.shape[0] > 0:
        entail_targets = entailment_lbls.target_matrix()
        l_entail = entailment_loss(E, entailment_lbls)

    return ForwardResult(
        loss=joint_loss(l_dec, l_align, l_entail, decision_weight),
        loss_decision=l_dec,
        loss_alignment=l_align,
        loss_entailment=l_entail,
        outcome=outcome,
        A=A, E=E,
        hyp_vectors=D, question_vector=uq, prem_vectors=U,
        coeffs=coeffs,
        gold=gold,
        align_mask=align_mask, align_targets=align_targets,
        entail_targets=entail_targets,
        decision_weight=decision_weight,
    )


@dataclass
class Gradients:
    params: dict[str, np.ndarray]
    hyp_vectors: np.ndarray
    question_vector: np.ndarray
    prem_vectors: np.ndarray


def backward(result: ForwardResult, params: BiAEParameters) -> Gradients:
    """Analytic gradients of the joint loss w.r.t. every parameter group and
    the encoded input vectors."""
    D, uq, U = result.hyp_vectors, result.question_vector, result.prem_vectors
    A, E, coeffs = result.A, result.E, result.coeffs
    outcome = result.outcome
    m, d = D.shape
    n = U.shape[0]
    S = params.state_vectors
    state_vecs = outcome.state_vectors
    attention, summary = outcome.attention, outcome.summary
    h = np.concatenate([D, state_vecs], axis=1)  # (m, 2d)

    grads = {name: np.zeros_like(arr) for name, arr in params.as_dict().items()}
    gD = np.zeros_like(D)
    gU = np.zeros_like(U)

    # decision head
    if result.gold is not None:
        gp = outcome.probabilities.copy()
        gp[result.gold.value] -= 1.0
        gp *= result.decision_weight
    else:
        gp = np.zeros(4)
    x_dec = np.concatenate([uq, summary])
    grads["decision_w"] += np.outer(gp, x_dec)
    grads["decision_b"] += gp
    gx = params.decision_w.T @ gp
    guq = gx[:d].copy()
    gs = gx[d:]

    # attention pooling: s = sum_i a_i h_i
    ga = h @ gs
    gh = np.outer(attention, gs)
    ga_raw = _softmax_vjp(attention, ga)
    grads["attn_w"] += h.T @ ga_raw
    grads["attn_b"] += ga_raw.sum(keepdims=True)
    gh += np.outer(ga_raw, params.attn_w)
    gD += gh[:, :d]
    g_state_vecs = gh[:, d:]  # (m, d) gradient on e_i

    if n > 0:
        # e_i = coeffs_i @ S
        g_coeffs = g_state_vecs @ S.T
        grads["state_vectors"] += coeffs.T @ g_state_vecs
        # coeffs_iK = sum_j A_ij E_ijK
        gA = np.einsum("ijk,ik->ij", E, g_coeffs)
        gE = np.einsum("ij,ik->ijk", A, g_coeffs)

        # entailment branch
        gE_raw = _softmax_vjp(E, gE, axis=2)
        if result.entail_targets is not None:
            t = result.entail_targets
            i_idx, j_idx = np.nonzero(t >= 0)
            ce = E[i_idx, j_idx].copy()
            ce[np.arange(len(i_idx)), t[i_idx, j_idx]] -= 1.0
            np.add.at(gE_raw, (i_idx, j_idx), ce)
        w1, w2, w3, w4 = (params.entail_w[:, k * d:(k + 1) * d] for k in range(4))
        gw1 = np.einsum("ijk,id->kd", gE_raw, D)
        gw2 = np.einsum("ijk,jd->kd", gE_raw, U)
        gw4 = np.einsum("ijk,id,jd->kd", gE_raw, D, U)
        grads["entail_w"] += np.concatenate([gw1, gw2, gw1 - gw2, gw4], axis=1)
        grads["entail_b"] += gE_raw.sum(axis=(0, 1))
        gD += np.einsum("ijk,kd->id", gE_raw, w1 + w3)
        gD += np.einsum("ijk,kd,jd->id", gE_raw, w4, U)
        gU += np.einsum("ijk,kd->jd", gE_raw, w2 - w3)
        gU += np.einsum("ijk,kd,id->jd", gE_raw, w4, D)

        # alignment branch
        gA_raw = _softmax_vjp(A, gA, axis=1)
        if result.align_mask is not None and result.align_mask.any():
            mask = result.align_mask
            gA_raw[mask] += A[mask] - result.align_targets[mask]
        row = gA_raw.sum(axis=1)
        col = gA_raw.sum(axis=0)
        w_d, w_u = params.align_w[:d], params.align_w[d:]
        grads["align_w"] += np.concatenate([D.T @ row, U.T @ col])
        grads["align_b"] += np.array([gA_raw.sum()])
        gD += np.outer(row, w_d)
        gU += np.outer(col, w_u)

    return Gradients(params=grads, hyp_vectors=gD,
                     question_vector=guq, prem_vectors=gU)
