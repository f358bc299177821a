"""Full-batch gradient-descent training of the embedding table.

The objective is the margin-ranking triple loss over the training triples
(each with a fixed set of uniformly corrupted tails, sampled once per run
so the loss landscape is stationary and descent is monotone at small
learning rates), plus the weighted supervised and contrastive terms over
the forest's labels and relation edges. Everything is deterministic given
the seed; the optimizer is plain gradient descent with a fixed rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingTable, TrainConfig, root_embedding
from .errors import TrainingDivergedError, ValidationError
from .forest import KnowledgeForest
from .losses import ClassifierParams

Triple = tuple[str, str, str]


@dataclass(frozen=True)
class EpochLoss:
    epoch: int
    total: float
    triple: float
    supervised: float
    contrastive: float


def epoch_line(record: EpochLoss) -> str:
    """``epoch,total,triple,supervised,contrastive`` at 6 significant digits."""
    return (f"{record.epoch},{record.total:.6g},{record.triple:.6g},"
            f"{record.supervised:.6g},{record.contrastive:.6g}")


@dataclass
class TrainResult:
    table: EmbeddingTable
    history: list[EpochLoss]
    classifier: ClassifierParams | None

    @property
    def initial_loss(self) -> float:
        return self.history[0].total

    @property
    def final_loss(self) -> float:
        return self.history[-1].total


class _Problem:
    """Index-array view of one training run; owns the parameter matrices."""

    def __init__(self, forest: KnowledgeForest, triples: list[Triple],
                 labels: dict[str, str], config: TrainConfig):
        self.config = config
        self.concept_ids = sorted(forest.concept_ids())
        self.index = {cid: i for i, cid in enumerate(self.concept_ids)}
        self.kinds = sorted({kind for _, _, kind in triples})
        kind_index = {k: i for i, k in enumerate(self.kinds)}

        for source, target, kind in triples:
            for cid in (source, target):
                if cid not in self.index:
                    raise ValidationError(
                        f"triple ({source!r}, {target!r}, {kind!r}) references "
                        f"unknown concept {cid!r}")
            if not kind:
                raise ValidationError(
                    f"triple ({source!r}, {target!r}) has an empty relation kind")
        self.heads = np.array([self.index[s] for s, _, _ in triples], dtype=np.int64)
        self.tails = np.array([self.index[t] for _, t, _ in triples], dtype=np.int64)
        self.rels = np.array([kind_index[k] for _, _, k in triples], dtype=np.int64)

        self.classes = sorted(set(labels.values()))
        class_index = {c: i for i, c in enumerate(self.classes)}
        self.labeled = np.array([self.index[cid] for cid in sorted(labels)], dtype=np.int64)
        self.label_classes = np.array(
            [class_index[labels[cid]] for cid in sorted(labels)], dtype=np.int64)

        edges = [(r.source, r.target) for r in forest.all_relations()]
        self.edge_u = np.array([self.index[u] for u, _ in edges], dtype=np.int64)
        self.edge_v = np.array([self.index[v] for _, v in edges], dtype=np.int64)

        rng = np.random.default_rng(config.seed)
        n = len(self.concept_ids)
        scale = config.init_scale
        self.E = rng.uniform(-scale, scale, (n, config.d))
        self.R = rng.uniform(-scale, scale, (len(self.kinds), config.d))
        self.W = rng.uniform(-scale, scale, (len(self.classes), config.d))
        self.b = np.zeros(len(self.classes))

        # Corrupted tails, drawn uniformly from the other concepts (the true
        # tail is shifted out of the draw), fixed for the whole run.
        reps = config.negatives_per_edge
        self.pos_rows = np.repeat(np.arange(len(triples)), reps)
        if len(triples) and n > 1:
            draws = rng.integers(0, n - 1, size=len(triples) * reps)
            true_tails = self.tails[self.pos_rows]
            self.neg_tails = draws + (draws >= true_tails)
        else:
            self.neg_tails = self.tails[self.pos_rows].copy()

    @property
    def use_supervised(self) -> bool:
        return self.config.lambda_s > 0.0 and len(self.labeled) > 0

    @property
    def use_contrastive(self) -> bool:
        return self.config.lambda_u > 0.0 and len(self.edge_u) > 0

    def loss_and_gradients(self):
        """One pass: component losses and gradients of the weighted total."""
        cfg = self.config
        dE = np.zeros_like(self.E)
        dR = np.zeros_like(self.R)
        dW = np.zeros_like(self.W)
        db = np.zeros_like(self.b)

        triple_total = 0.0
        if len(self.heads):
            weight = 1.0 / cfg.negatives_per_edge
            h = self.heads[self.pos_rows]
            t = self.tails[self.pos_rows]
            r = self.rels[self.pos_rows]
            pos = self.E[h] + self.R[r] - self.E[t]
            neg = self.E[h] + self.R[r] - self.E[self.neg_tails]
            d_pos = np.linalg.norm(pos, axis=1)
            d_neg = np.linalg.norm(neg, axis=1)
            hinge = cfg.margin + d_pos - d_neg
            active = hinge > 0.0
            # maximum() propagates NaN so a diverged run cannot hide here
            triple_total = weight * float(np.sum(np.maximum(hinge, 0.0)))
            u_pos = np.divide(pos, d_pos[:, None], out=np.zeros_like(pos),
                              where=d_pos[:, None] > 0.0)
            u_neg = np.divide(neg, d_neg[:, None], out=np.zeros_like(neg),
                              where=d_neg[:, None] > 0.0)
            u_pos[~active] = 0.0
            u_neg[~active] = 0.0
            u_pos *= weight
            u_neg *= weight
            np.add.at(dE, h, u_pos - u_neg)
            np.add.at(dE, t, -u_pos)
            np.add.at(dE, self.neg_tails, u_neg)
            np.add.at(dR, r, u_pos - u_neg)

        supervised_total = 0.0
        if self.use_supervised:
            vectors = self.E[self.labeled]
            logits = vectors @ self.W.T + self.b
            logits -= logits.max(axis=1, keepdims=True)
            probs = np.exp(logits)
            probs /= probs.sum(axis=1, keepdims=True)
            rows = np.arange(len(self.labeled))
            supervised_total = -float(np.sum(np.log(probs[rows, self.label_classes])))
            delta = probs
            delta[rows, self.label_classes] -= 1.0
            dW += cfg.lambda_s * (delta.T @ vectors)
            db += cfg.lambda_s * delta.sum(axis=0)
            np.add.at(dE, self.labeled, cfg.lambda_s * (delta @ self.W))

        contrastive_total = 0.0
        if self.use_contrastive:
            anchors = self.E[self.edge_u]
            scores = anchors @ self.E.T
            shift = scores.max(axis=1, keepdims=True)
            exp = np.exp(scores - shift)
            lse = np.log(exp.sum(axis=1)) + shift[:, 0]
            rows = np.arange(len(self.edge_u))
            contrastive_total = float(np.sum(lse - scores[rows, self.edge_v]))
            coeff = exp / exp.sum(axis=1, keepdims=True)
            coeff[rows, self.edge_v] -= 1.0
            np.add.at(dE, self.edge_u, cfg.lambda_u * (coeff @ self.E))
            dE += cfg.lambda_u * (coeff.T @ anchors)

        total = (triple_total + cfg.lambda_s * supervised_total
                 + cfg.lambda_u * contrastive_total)
        return (total, triple_total, supervised_total, contrastive_total,
                dE, dR, dW, db)


def collect_labels(forest: KnowledgeForest) -> dict[str, str]:
    """Concept labels present in the forest, keyed by concept id."""
    return {c.id: c.label for c in forest.all_concepts() if c.label is not None}


def train(forest: KnowledgeForest, triples, labels: dict[str, str] | None = None,
          config: TrainConfig = TrainConfig()) -> TrainResult:
    """Run ``config.epochs`` of full-batch descent and return the result.

    ``labels=None`` collects labels from the forest's concepts. The history
    holds epochs+1 records: index 0 is the loss at initialization, record e
    the loss after the e-th update. Identical seeds give bit-identical
    tables; a non-finite loss aborts with the offending epoch.
    """
    triples = [tuple(t) for t in triples]
    if labels is None:
        labels = collect_labels(forest)
    else:
        known = forest.concept_ids()
        for cid in labels:
            if cid not in known:
                raise ValidationError(f"label on unknown concept {cid!r}")
    problem = _Problem(forest, triples, labels, config)

    history: list[EpochLoss] = []
    # overflow to inf/nan is detected per epoch and raised; the interim
    # numpy warnings carry no extra information
    with np.errstate(over="ignore", invalid="ignore"):
        (total, triple_part, sup_part, con_part,
         dE, dR, dW, db) = problem.loss_and_gradients()
        history.append(EpochLoss(0, total, triple_part, sup_part, con_part))
        if not np.isfinite(total):
            raise TrainingDivergedError(0)
        lr = config.learning_rate
        for epoch in range(1, config.epochs + 1):
            problem.E -= lr * dE
            problem.R -= lr * dR
            problem.W -= lr * dW
            problem.b -= lr * db
            (total, triple_part, sup_part, con_part,
             dE, dR, dW, db) = problem.loss_and_gradients()
            history.append(EpochLoss(epoch, total, triple_part, sup_part, con_part))
            if not np.isfinite(total):
                raise TrainingDivergedError(epoch)

    table = EmbeddingTable(config.d)
    for cid, row in zip(problem.concept_ids, problem.E):
        table.set_concept(cid, row.copy())
    for kind, row in zip(problem.kinds, problem.R):
        table.set_relation(kind, row.copy())
    for tree in forest.trees:
        table.set_tree(tree.tree_id, root_embedding(tree, table, "mean"))
    classifier = None
    if problem.classes:
        classifier = ClassifierParams(tuple(problem.classes),
                                      problem.W.copy(), problem.b.copy())
    return TrainResult(table, history, classifier)
