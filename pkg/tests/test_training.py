"""End-to-end training: determinism, monotone descent on the reference
configuration, and the full objective's gradients."""

import numpy as np
import pytest

from foke import (
    EpochLoss,
    KnowledgeForest,
    TrainConfig,
    TrainingDivergedError,
    ValidationError,
    collect_labels,
    epoch_line,
    finite_diff_gradient,
    root_embedding,
    train,
)
from foke.training import _Problem

from conftest import (
    PINNED_CONFIG,
    PINNED_FINAL_LOSS,
    PINNED_INITIAL_LOSS,
    chain_tree,
    make_tree,
)

import oracles

SMALL = TrainConfig(d=4, epochs=10, seed=7)


def small_setup():
    tree = make_tree("t", {"a": None, "b": "a", "c": "a"})
    forest = KnowledgeForest([tree])
    triples = [("a", "b", "hierarchy"), ("a", "c", "hierarchy")]
    return forest, triples


def test_zero_epochs_returns_the_initialization():
    forest, triples = small_setup()
    config = TrainConfig(d=4, epochs=0, seed=3)
    first = train(forest, triples, {}, config)
    second = train(forest, triples, {}, config)
    assert len(first.history) == 1
    assert first.history[0].epoch == 0
    assert first.table == second.table


def test_history_has_one_record_per_epoch_plus_initialization():
    forest, triples = small_setup()
    result = train(forest, triples, {}, SMALL)
    assert [h.epoch for h in result.history] == list(range(11))
    assert result.initial_loss == result.history[0].total
    assert result.final_loss == result.history[-1].total


def test_identical_seeds_give_bit_identical_tables():
    forest, triples = small_setup()
    assert train(forest, triples, {}, SMALL).table == \
        train(forest, triples, {}, SMALL).table


def test_different_seeds_give_different_tables():
    forest, triples = small_setup()
    other = TrainConfig(d=4, epochs=10, seed=8)
    assert train(forest, triples, {}, SMALL).table != \
        train(forest, triples, {}, other).table


def test_reference_run_matches_its_pinned_losses(trained):
    assert trained.initial_loss == pytest.approx(PINNED_INITIAL_LOSS, rel=1e-9)
    assert trained.final_loss == pytest.approx(PINNED_FINAL_LOSS, rel=1e-9)


def test_reference_run_descends_monotonically(trained):
    totals = [h.total for h in trained.history]
    assert all(b < a for a, b in zip(totals, totals[1:]))
    assert totals[-1] <= 0.5 * totals[0]


def test_huge_learning_rate_diverges_loudly():
    forest, triples = small_setup()
    config = TrainConfig(d=4, epochs=50, learning_rate=1e6, lambda_u=1.0, seed=0)
    with pytest.raises(TrainingDivergedError) as info:
        train(forest, triples, {}, config)
    assert info.value.epoch >= 1
    assert "not finite" in str(info.value)


def test_triples_must_reference_known_concepts():
    forest, _ = small_setup()
    with pytest.raises(ValidationError, match="unknown concept 'ghost'"):
        train(forest, [("a", "ghost", "hierarchy")], {}, SMALL)


def test_triples_need_a_relation_kind():
    forest, _ = small_setup()
    with pytest.raises(ValidationError, match="empty relation kind"):
        train(forest, [("a", "b", "")], {}, SMALL)


def test_labels_must_reference_known_concepts():
    forest, triples = small_setup()
    with pytest.raises(ValidationError, match="label on unknown concept"):
        train(forest, triples, {"ghost": "cs"}, SMALL)


def test_full_objective_gradients_match_finite_differences():
    forest, triples = small_setup()
    labels = {"a": "x", "b": "y"}
    config = TrainConfig(d=3, margin=0.5, lambda_s=0.05, lambda_u=0.05,
                         negatives_per_edge=2, seed=11)
    problem = _Problem(forest, triples, labels, config)

    # keep the check away from the hinge boundary and the norm kinks
    h = problem.pos_rows
    pos = (problem.E[problem.heads[h]] + problem.R[problem.rels[h]]
           - problem.E[problem.tails[h]])
    neg = (problem.E[problem.heads[h]] + problem.R[problem.rels[h]]
           - problem.E[problem.neg_tails])
    d_pos = np.linalg.norm(pos, axis=1)
    d_neg = np.linalg.norm(neg, axis=1)
    assert np.all(np.abs(config.margin + d_pos - d_neg) >= 1e-3)
    assert np.all(d_pos >= 1e-3) and np.all(d_neg >= 1e-3)

    analytic = problem.loss_and_gradients()
    loss = lambda _: problem.loss_and_gradients()[0]
    for grad, params in zip(analytic[4:], (problem.E, problem.R, problem.W,
                                           problem.b)):
        assert oracles.close(grad, finite_diff_gradient(loss, params))


def test_epoch_lines_use_six_significant_digits():
    record = EpochLoss(3, 1.2345678, 0.5, 0.0, 0.0078125)
    assert epoch_line(record) == "3,1.23457,0.5,0,0.0078125"


def test_collect_labels_reads_the_forest(forest):
    labels = collect_labels(forest)
    assert len(labels) == 12
    assert labels["dp"] == "cs"
    assert labels["calc"] == "math"
    assert set(labels.values()) == {"cs", "math"}


def test_default_labels_come_from_the_forest(forest, document):
    config = TrainConfig(d=4, epochs=2, seed=5)
    implicit = train(forest, document.triples, None, config)
    explicit = train(forest, document.triples, collect_labels(forest), config)
    assert implicit.table == explicit.table
    assert implicit.classifier.classes == ("cs", "math")


def test_tree_vectors_are_mean_pooled_roots(forest, trained):
    for tree in forest.trees:
        expected = root_embedding(tree, trained.table, "mean")
        assert np.array_equal(trained.table.tree(tree.tree_id), expected)


def test_unlabeled_forests_get_no_classifier():
    forest, triples = small_setup()
    result = train(forest, triples, {}, SMALL)
    assert result.classifier is None


def test_corrupted_tails_avoid_the_true_tail():
    forest = KnowledgeForest([chain_tree("t", [f"c{i}" for i in range(6)])])
    triples = [(f"c{i}", f"c{i+1}", "hierarchy") for i in range(5)]
    for seed in range(25):
        config = TrainConfig(d=3, negatives_per_edge=4, seed=seed)
        problem = _Problem(forest, triples, {}, config)
        true_tails = problem.tails[problem.pos_rows]
        assert np.all(problem.neg_tails != true_tails)
        assert np.all((0 <= problem.neg_tails)
                      & (problem.neg_tails < len(problem.concept_ids)))
