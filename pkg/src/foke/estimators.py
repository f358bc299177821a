"""Scikit-learn-style estimators wrapping the trainer and recommender.

These make the learnable core compose with the wider ecosystem
(``get_params``/``set_params``, ``clone``, pipelines): ``ForestEmbedder``
is the fit/transform face of :func:`foke.training.train`, and
``NextTreeRecommender`` the fit/predict face of the tree-relation matrix
plus :func:`foke.inference.recommend_next`. The plain library functions
remain the primary API; the estimators add no behavior of their own.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .embedding import EmbeddingTable, TrainConfig, root_embedding
from .errors import ValidationError
from .forest import KnowledgeForest
from .inference import InferenceConfig, recommend_next, recommendation_scores, tree_relations
from .training import train


class ForestEmbedder(BaseEstimator):
    """Learns concept/relation/tree vectors from a forest and its triples.

    Parameters mirror the training configuration; after ``fit`` the learned
    state lives in ``table_``, ``history_``, and ``classifier_``.
    """

    def __init__(self, d=8, margin=1.0, lambda_s=0.0, lambda_u=0.0,
                 learning_rate=1e-3, epochs=0, negatives_per_edge=1,
                 seed=0, init_scale=0.1):
        self.d = d
        self.margin = margin
        self.lambda_s = lambda_s
        self.lambda_u = lambda_u
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.negatives_per_edge = negatives_per_edge
        self.seed = seed
        self.init_scale = init_scale

    def _config(self) -> TrainConfig:
        return TrainConfig(d=self.d, margin=self.margin, lambda_s=self.lambda_s,
                           lambda_u=self.lambda_u, learning_rate=self.learning_rate,
                           epochs=self.epochs,
                           negatives_per_edge=self.negatives_per_edge,
                           seed=self.seed, init_scale=self.init_scale)

    def fit(self, forest: KnowledgeForest, triples=(), labels=None):
        result = train(forest, triples, labels, self._config())
        self.table_ = result.table
        self.history_ = result.history
        self.classifier_ = result.classifier
        return self

    def transform(self, concept_ids) -> np.ndarray:
        """Stack the learned vectors for the given concept ids, row per id."""
        check_is_fitted(self, "table_")
        ids = list(concept_ids)
        if not ids:
            return np.zeros((0, self.table_.dimension))
        return np.stack([self.table_.concept(cid) for cid in ids])

    def fit_transform(self, forest, triples=(), labels=None, concept_ids=None):
        self.fit(forest, triples, labels)
        if concept_ids is None:
            concept_ids = sorted(forest.concept_ids())
        return self.transform(concept_ids)


class NextTreeRecommender(BaseEstimator):
    """Derives the tree-relation matrix and recommends the next tree.

    ``predict`` accepts a single mastery vector or a (n, K) batch; mastered
    forests yield -1 so the output stays an integer array.
    """

    def __init__(self, tau=0.8, pooling="mean"):
        self.tau = tau
        self.pooling = pooling

    def fit(self, forest: KnowledgeForest, table: EmbeddingTable):
        for tree in forest.trees:
            if tree.tree_id not in table.tree_vectors:
                table.set_tree(tree.tree_id, root_embedding(tree, table, self.pooling))
        self.matrix_ = tree_relations(table, forest, InferenceConfig(tau=self.tau))
        self.tree_ids_ = tuple(t.tree_id for t in forest.trees)
        return self

    def predict(self, mastery) -> np.ndarray | int:
        check_is_fitted(self, "matrix_")
        arr = np.asarray(mastery, dtype=np.float64)
        if arr.ndim == 1:
            chosen = recommend_next(self.matrix_, arr)
            return -1 if chosen is None else chosen
        if arr.ndim != 2:
            raise ValidationError(f"mastery must be 1-D or 2-D, got shape {arr.shape}")
        out = np.empty(arr.shape[0], dtype=np.int64)
        for i, row in enumerate(arr):
            chosen = recommend_next(self.matrix_, row)
            out[i] = -1 if chosen is None else chosen
        return out

    def decision_scores(self, mastery) -> np.ndarray:
        """Per-tree scores behind ``predict`` for one mastery vector."""
        check_is_fitted(self, "matrix_")
        return recommendation_scores(self.matrix_, mastery)
