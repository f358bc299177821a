"""Embedding tables, vector helpers, and the message-passing layer.

Vectors are float64 numpy arrays of a fixed per-table dimension. The table
maps concept ids, relation kinds, and tree ids to vectors; training
(:mod:`foke.training`) fills it, inference reads it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError, MissingEmbeddingError, ValidationError

NONLINEARITIES = ("tanh", "relu", "identity")
POOLINGS = ("mean", "max")


def as_vector(values: Iterable[float], dim: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 1-D array, optionally enforcing length."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValidationError("vector entries must be finite (no NaN/Inf)")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {vec.shape[0]}")
    return vec


def softmax(scores: np.ndarray) -> np.ndarray:
    """Shift-stable softmax over a 1-D score array."""
    shifted = scores - np.max(scores)
    weights = np.exp(shifted)
    return weights / np.sum(weights)


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity, clipped into [-1, 1] against float drift.

    Zero-vector handling lives in :func:`foke.inference.similarity`; this
    helper assumes nonzero inputs.
    """
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    value = float(np.dot(x, y)) / (nx * ny)
    return float(np.clip(value, -1.0, 1.0))


@dataclass
class EmbeddingTable:
    """d-dimensional vectors for concepts, relation kinds, and trees."""

    dimension: int
    concept_vectors: dict[str, np.ndarray] = field(default_factory=dict)
    relation_vectors: dict[str, np.ndarray] = field(default_factory=dict)
    tree_vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.dimension}")
        for table in (self.concept_vectors, self.relation_vectors, self.tree_vectors):
            for key, vec in table.items():
                table[key] = as_vector(vec, self.dimension)

    def set_concept(self, concept_id: str, vector: Iterable[float]) -> None:
        self.concept_vectors[concept_id] = as_vector(vector, self.dimension)

    def set_relation(self, kind: str, vector: Iterable[float]) -> None:
        self.relation_vectors[kind] = as_vector(vector, self.dimension)

    def set_tree(self, tree_id: str, vector: Iterable[float]) -> None:
        self.tree_vectors[tree_id] = as_vector(vector, self.dimension)

    def concept(self, concept_id: str) -> np.ndarray:
        try:
            return self.concept_vectors[concept_id]
        except KeyError:
            raise MissingEmbeddingError(f"no embedding for concept {concept_id!r}") from None

    def relation(self, kind: str) -> np.ndarray:
        try:
            return self.relation_vectors[kind]
        except KeyError:
            raise MissingEmbeddingError(f"no embedding for relation kind {kind!r}") from None

    def tree(self, tree_id: str) -> np.ndarray:
        try:
            return self.tree_vectors[tree_id]
        except KeyError:
            raise MissingEmbeddingError(f"no embedding for tree {tree_id!r}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        if self.dimension != other.dimension:
            return False
        for mine, theirs in ((self.concept_vectors, other.concept_vectors),
                             (self.relation_vectors, other.relation_vectors),
                             (self.tree_vectors, other.tree_vectors)):
            if mine.keys() != theirs.keys():
                return False
            if any(not np.array_equal(mine[k], theirs[k]) for k in mine):
                return False
        return True


@dataclass(frozen=True)
class TrainConfig:
    """All optimization hyperparameters; every field is validated on build."""

    d: int = 8
    margin: float = 1.0
    lambda_s: float = 0.0
    lambda_u: float = 0.0
    learning_rate: float = 1e-3
    epochs: int = 0
    negatives_per_edge: int = 1
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        checks = [
            (self.d >= 1, f"d must be >= 1, got {self.d}"),
            (self.margin > 0, f"margin must be > 0, got {self.margin}"),
            (self.lambda_s >= 0, f"lambda_s must be >= 0, got {self.lambda_s}"),
            (self.lambda_u >= 0, f"lambda_u must be >= 0, got {self.lambda_u}"),
            (self.learning_rate > 0, f"learning_rate must be > 0, got {self.learning_rate}"),
            (self.epochs >= 0, f"epochs must be >= 0, got {self.epochs}"),
            (self.negatives_per_edge >= 1,
             f"negatives_per_edge must be >= 1, got {self.negatives_per_edge}"),
            (self.init_scale > 0, f"init_scale must be > 0, got {self.init_scale}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValidationError(message)


@dataclass
class GnnLayerParams:
    """Affine update parameters for one round of message passing."""

    self_weight: np.ndarray
    message_weight: np.ndarray
    bias: np.ndarray
    nonlinearity: str = "tanh"

    def __post_init__(self):
        self.self_weight = np.asarray(self.self_weight, dtype=np.float64)
        self.message_weight = np.asarray(self.message_weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        d = self.bias.shape[0]
        if self.self_weight.shape != (d, d) or self.message_weight.shape != (d, d):
            raise DimensionError(
                f"weight matrices must be ({d}, {d}); got "
                f"{self.self_weight.shape} and {self.message_weight.shape}")
        for arr in (self.self_weight, self.message_weight, self.bias):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("layer parameters must be finite")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValidationError(
                f"nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}")

    @classmethod
    def identity(cls, d: int) -> "GnnLayerParams":
        """Pass-through layer: useful as a neutral default and in tests."""
        return cls(np.eye(d), np.zeros((d, d)), np.zeros(d), "identity")


def _apply_nonlinearity(name: str, x: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(x)
    if name == "relu":
        return np.maximum(x, 0.0)
    return x


def gnn_layer(prev: np.ndarray, neighbor_vectors: Iterable[np.ndarray],
              params: GnnLayerParams) -> np.ndarray:
    """One aggregation-and-update round for a single node.

    The message is the mean of the neighbor vectors (zero when there are
    none), so the result is invariant to neighbor ordering.
    """
    d = params.bias.shape[0]
    prev = as_vector(prev, d)
    neighbors = [as_vector(v, d) for v in neighbor_vectors]
    if neighbors:
        message = np.mean(neighbors, axis=0)
    else:
        message = np.zeros(d)
    out = params.self_weight @ prev + params.message_weight @ message + params.bias
    return _apply_nonlinearity(params.nonlinearity, out)


def propagate(tree, table: EmbeddingTable, params: GnnLayerParams,
              layers: int = 1) -> dict[str, np.ndarray]:
    """Run ``layers`` rounds of message passing over a tree's relation graph.

    Neighbors are taken undirected over every relation kind. Parameters are
    shared across rounds. Returns a fresh id -> vector map; the table is
    not modified.
    """
    if layers < 0:
        raise ValidationError(f"layers must be >= 0, got {layers}")
    adjacency: dict[str, set[str]] = {cid: set() for cid in tree.concepts}
    for rel in tree.relations:
        adjacency[rel.source].add(rel.target)
        adjacency[rel.target].add(rel.source)
    current = {cid: table.concept(cid) for cid in tree.concepts}
    for _ in range(layers):
        current = {
            cid: gnn_layer(current[cid],
                           [current[n] for n in sorted(adjacency[cid])],
                           params)
            for cid in current
        }
    return current


def root_embedding(tree, table: EmbeddingTable, pooling: str = "mean") -> np.ndarray:
    """Pool a tree's concept vectors into its summary vector."""
    if pooling not in POOLINGS:
        raise ValidationError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
    stacked = np.stack([table.concept(cid) for cid in tree.concepts])
    if pooling == "mean":
        return stacked.mean(axis=0)
    return stacked.max(axis=0)
