"""Cross-tree structure and the recommendation math.

Tree-level relations are a derived, symmetric 0/1 matrix: entry (i, j) is 1
when the root embeddings of trees i and j reach the cosine threshold. On
top of it sit most-relevant-tree retrieval for a query vector and the
next-tree recommendation, which scores each tree by how related it is to
what the learner already masters, discounted by how mastered it is itself.

All tie-breaks resolve to the lowest index in forest insertion order, and
all tree indices are 0-based positions in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddingTable, cosine
from .errors import DimensionError, NotFoundError, ValidationError, ZeroVectorError
from .forest import KnowledgeForest


@dataclass(frozen=True)
class InferenceConfig:
    """Thresholds for tree-level (tau) and within-tree (tau_c) inference."""

    tau: float = 0.8
    tau_c: float = 0.8
    similarity: str = "cosine"

    def __post_init__(self):
        for name, value in (("tau", self.tau), ("tau_c", self.tau_c)):
            if not -1.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [-1, 1], got {value}")
        if self.similarity != "cosine":
            raise ValidationError(
                f"only cosine similarity is supported, got {self.similarity!r}")


@dataclass
class TreeRelationMatrix:
    """Symmetric K x K 0/1 matrix with unit diagonal, plus the threshold and
    tree order that produced it."""

    values: np.ndarray
    tau: float
    tree_ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        k = self.values.shape[0]
        if self.values.shape != (k, k):
            raise DimensionError(f"relation matrix must be square, got {self.values.shape}")
        if not np.array_equal(self.values, self.values.T):
            raise ValidationError("relation matrix must be symmetric")
        if not np.all((self.values == 0) | (self.values == 1)):
            raise ValidationError("relation matrix entries must be 0 or 1")

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, key):
        return self.values[key]

    def __eq__(self, other):
        if not isinstance(other, TreeRelationMatrix):
            return NotImplemented
        return (self.tau == other.tau and self.tree_ids == other.tree_ids
                and np.array_equal(self.values, other.values))


def similarity(x, y) -> float:
    """Cosine similarity of two nonzero vectors of equal length."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"vectors disagree on shape: {x.shape} vs {y.shape}")
    if not np.any(x) or not np.any(y):
        raise ZeroVectorError("similarity is undefined for the zero vector")
    return cosine(x, y)


def tree_relations(table: EmbeddingTable, forest: KnowledgeForest,
                   config: InferenceConfig = InferenceConfig()) -> TreeRelationMatrix:
    """Threshold pairwise root-embedding similarities into the 0/1 matrix.

    Each unordered pair is evaluated once (symmetry by construction) and the
    diagonal is 1 by definition: a tree is always related to itself.
    """
    roots = [table.tree(tree.tree_id) for tree in forest.trees]
    k = len(roots)
    values = np.eye(k, dtype=np.int64)
    for i in range(k):
        for j in range(i + 1, k):
            if similarity(roots[i], roots[j]) >= config.tau:
                values[i, j] = values[j, i] = 1
    return TreeRelationMatrix(values, config.tau,
                              tuple(t.tree_id for t in forest.trees))


def retrieve_tree(query, table: EmbeddingTable,
                  forest: KnowledgeForest) -> tuple[str, float]:
    """Most relevant tree for a query vector: argmax of root-embedding cosine,
    first tree winning ties. Returns (tree_id, similarity)."""
    if not forest.trees:
        raise NotFoundError("cannot retrieve from an empty forest")
    best_id = None
    best_sim = -np.inf
    for tree in forest.trees:
        sim = similarity(query, table.tree(tree.tree_id))
        if sim > best_sim:
            best_id, best_sim = tree.tree_id, sim
    return best_id, best_sim


def recommendation_scores(matrix: TreeRelationMatrix, mastery) -> np.ndarray:
    """Per-tree scores (sum_i r[i, k] * s_i) * (1 - s_k), the recommendation
    objective before the argmax."""
    s = np.asarray(list(mastery), dtype=np.float64)
    if s.shape != (matrix.size,):
        raise DimensionError(
            f"mastery has {s.shape[0] if s.ndim == 1 else s.shape} entries, "
            f"matrix expects {matrix.size}")
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValidationError("mastery entries must lie in [0, 1]")
    return (matrix.values.T @ s) * (1.0 - s)


def recommend_next(matrix: TreeRelationMatrix, mastery) -> int | None:
    """Index of the next tree to study, or None when everything is mastered.

    Trees with mastery exactly 1 are ineligible; among eligible trees the
    highest score wins and ties go to the lowest index, so a cold start
    (all scores 0) still makes progress from tree 0.
    """
    scores = recommendation_scores(matrix, mastery)
    s = np.asarray(list(mastery), dtype=np.float64)
    best = None
    for k in range(matrix.size):
        if s[k] >= 1.0:
            continue
        if best is None or scores[k] > scores[best]:
            best = k
    return best
