"""Loss functions over embedding tables, with closed-form gradients.

Three objectives: margin-ranking over relation triples, cross-entropy over
labeled concepts through a linear-softmax head, and a softmax contrastive
term pulling edge endpoints together against the whole concept universe.
Each loss ships its analytic gradient so correctness can be checked against
:func:`finite_diff_gradient` rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .embedding import EmbeddingTable, TrainConfig, as_vector, softmax
from .errors import DimensionError, ValidationError, ZeroVectorError

SIMILARITIES = ("dot", "cosine")


# --- triple margin ranking -------------------------------------------------

def triple_loss(h_ci: np.ndarray, h_cj: np.ndarray, h_r: np.ndarray,
                h_ci_neg: np.ndarray, h_cj_neg: np.ndarray,
                margin: float) -> float:
    """Hinge on the translation distances of a positive and a corrupted triple:
    max(0, margin + ||h_ci + h_r - h_cj|| - ||h_ci' + h_r - h_cj'||)."""
    vectors = [as_vector(v) for v in (h_ci, h_cj, h_r, h_ci_neg, h_cj_neg)]
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise DimensionError(f"triple vectors disagree on dimension: {sorted(dims)}")
    h_ci, h_cj, h_r, h_ci_neg, h_cj_neg = vectors
    pos = float(np.linalg.norm(h_ci + h_r - h_cj))
    neg = float(np.linalg.norm(h_ci_neg + h_r - h_cj_neg))
    return max(0.0, margin + pos - neg)


def _unit_or_zero(diff: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(diff)
    if norm == 0.0:
        return np.zeros_like(diff)
    return diff / norm


def triple_loss_gradients(h_ci, h_cj, h_r, h_ci_neg, h_cj_neg, margin):
    """Gradients of :func:`triple_loss` w.r.t. its five vectors, in order.

    At the hinge boundary and at zero distances the subgradient 0 is used;
    finite-difference checks exclude those kinks.
    """
    h_ci, h_cj, h_r = as_vector(h_ci), as_vector(h_cj), as_vector(h_r)
    h_ci_neg, h_cj_neg = as_vector(h_ci_neg), as_vector(h_cj_neg)
    pos_diff = h_ci + h_r - h_cj
    neg_diff = h_ci_neg + h_r - h_cj_neg
    value = margin + np.linalg.norm(pos_diff) - np.linalg.norm(neg_diff)
    zero = np.zeros_like(h_ci)
    if value <= 0.0:
        return zero, zero.copy(), zero.copy(), zero.copy(), zero.copy()
    u_pos = _unit_or_zero(pos_diff)
    u_neg = _unit_or_zero(neg_diff)
    return u_pos, -u_pos, u_pos - u_neg, -u_neg, u_neg


# --- supervised cross-entropy ----------------------------------------------

@dataclass
class ClassifierParams:
    """Linear-softmax head mapping d-dimensional vectors to class logits."""

    classes: tuple[str, ...]
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        c = len(self.classes)
        if len(set(self.classes)) != c:
            raise ValidationError("classifier classes must be unique")
        if self.weights.shape[0] != c or self.bias.shape != (c,):
            raise DimensionError(
                f"classifier shapes must be ({c}, d) and ({c},); got "
                f"{self.weights.shape} and {self.bias.shape}")

    def probabilities(self, vector: np.ndarray) -> np.ndarray:
        return softmax(self.weights @ vector + self.bias)


def supervised_loss(table: EmbeddingTable, labeled: Mapping[str, str],
                    params: ClassifierParams) -> float:
    """Summed cross-entropy of the head's predictions on labeled concepts.

    Concepts absent from ``labeled`` contribute nothing; an empty mapping
    gives 0.
    """
    total = 0.0
    for concept_id, label in labeled.items():
        if label not in params.classes:
            raise ValidationError(
                f"label {label!r} on concept {concept_id!r} is outside the class "
                f"set {list(params.classes)}")
        probs = params.probabilities(table.concept(concept_id))
        total -= float(np.log(probs[params.classes.index(label)]))
    return total


def supervised_loss_gradients(table, labeled, params):
    """Returns (per-concept vector grads, dW, db) for :func:`supervised_loss`."""
    d_vectors: dict[str, np.ndarray] = {}
    d_weights = np.zeros_like(params.weights)
    d_bias = np.zeros_like(params.bias)
    for concept_id, label in labeled.items():
        if label not in params.classes:
            raise ValidationError(
                f"label {label!r} on concept {concept_id!r} is outside the class "
                f"set {list(params.classes)}")
        vec = table.concept(concept_id)
        delta = params.probabilities(vec).copy()
        delta[params.classes.index(label)] -= 1.0
        d_weights += np.outer(delta, vec)
        d_bias += delta
        grad = params.weights.T @ delta
        d_vectors[concept_id] = d_vectors.get(concept_id, 0.0) + grad
    return d_vectors, d_weights, d_bias


# --- contrastive neighbor loss ----------------------------------------------

def _similarity_scores(anchor: np.ndarray, candidates: np.ndarray,
                       similarity: str) -> np.ndarray:
    if similarity == "dot":
        return candidates @ anchor
    norms = np.linalg.norm(candidates, axis=1)
    anchor_norm = np.linalg.norm(anchor)
    if anchor_norm == 0.0 or np.any(norms == 0.0):
        raise ZeroVectorError("cosine similarity is undefined for zero vectors")
    return (candidates @ anchor) / (norms * anchor_norm)


def contrastive_loss(table: EmbeddingTable, edges: Sequence[tuple[str, str]],
                     similarity: str = "dot") -> float:
    """Softmax loss pulling each edge's endpoints together relative to every
    embedded concept (the anchor itself included in the denominator)."""
    if similarity not in SIMILARITIES:
        raise ValidationError(f"similarity must be one of {SIMILARITIES}, got {similarity!r}")
    ids = sorted(table.concept_vectors)
    index = {cid: i for i, cid in enumerate(ids)}
    matrix = np.stack([table.concept_vectors[cid] for cid in ids]) if ids else np.zeros((0, 1))
    total = 0.0
    for u, v in edges:
        anchor = table.concept(u)
        table.concept(v)
        scores = _similarity_scores(anchor, matrix, similarity)
        shifted = scores - np.max(scores)
        total += float(np.log(np.sum(np.exp(shifted))) + np.max(scores) - scores[index[v]])
    return total


def contrastive_loss_gradients(table, edges, similarity: str = "dot"):
    """Per-concept gradients of :func:`contrastive_loss` as an id -> vector map."""
    if similarity not in SIMILARITIES:
        raise ValidationError(f"similarity must be one of {SIMILARITIES}, got {similarity!r}")
    ids = sorted(table.concept_vectors)
    index = {cid: i for i, cid in enumerate(ids)}
    matrix = np.stack([table.concept_vectors[cid] for cid in ids])
    grads = {cid: np.zeros(table.dimension) for cid in ids}
    norms = np.linalg.norm(matrix, axis=1)
    for u, v in edges:
        ui, vi = index[u], index[v]
        anchor = matrix[ui]
        scores = _similarity_scores(anchor, matrix, similarity)
        coeff = softmax(scores)
        coeff[vi] -= 1.0
        if similarity == "dot":
            # d(score_j)/d(anchor) = h_j, d(score_j)/d(h_j) = anchor
            grads[u] += matrix.T @ coeff
            for j, cid in enumerate(ids):
                grads[cid] += coeff[j] * anchor
        else:
            unit = matrix / norms[:, None]
            for j, cid in enumerate(ids):
                if j == ui:
                    continue  # cos(x, x) is constant 1: no gradient
                grads[u] += coeff[j] * (unit[j] - scores[j] * unit[ui]) / norms[ui]
                grads[cid] += coeff[j] * (unit[ui] - scores[j] * unit[j]) / norms[j]
    return grads


# --- combined objective ----------------------------------------------------

@dataclass
class SupervisionData:
    """Inputs shared by the supervised and contrastive terms."""

    labeled: Mapping[str, str]
    classifier: ClassifierParams
    edges: Sequence[tuple[str, str]]
    similarity: str = "dot"


def combined_loss(table: EmbeddingTable, data: SupervisionData,
                  config: TrainConfig) -> float:
    """lambda_s * supervised + lambda_u * contrastive, exactly bilinear in
    the two coefficients."""
    total = 0.0
    if config.lambda_s != 0.0:
        total += config.lambda_s * supervised_loss(table, data.labeled, data.classifier)
    if config.lambda_u != 0.0:
        total += config.lambda_u * contrastive_loss(table, data.edges, data.similarity)
    return total


# --- finite-difference oracle ----------------------------------------------

def finite_diff_gradient(loss_fn: Callable[[np.ndarray], float],
                         params: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient estimate, one coordinate at a time."""
    if eps <= 0:
        raise ValidationError(f"eps must be > 0, got {eps}")
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros_like(params)
    flat = params.ravel()
    out = grad.ravel()
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = loss_fn(params)
        flat[i] = original - eps
        minus = loss_fn(params)
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * eps)
    return grad
