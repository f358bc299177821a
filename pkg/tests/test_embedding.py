"""Vector helpers, the embedding table, message passing, and pooling."""

import numpy as np
import pytest

from foke import (
    DimensionError,
    EmbeddingTable,
    GnnLayerParams,
    MissingEmbeddingError,
    TrainConfig,
    ValidationError,
    as_vector,
    cosine,
    gnn_layer,
    propagate,
    root_embedding,
    softmax,
)

from conftest import make_tree


def test_as_vector_coerces_and_checks():
    vec = as_vector([1, 2, 3])
    assert vec.dtype == np.float64
    assert vec.tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(DimensionError):
        as_vector([[1.0, 2.0]])
    with pytest.raises(DimensionError):
        as_vector([1.0, 2.0], dim=3)
    with pytest.raises(ValidationError):
        as_vector([1.0, float("nan")])
    with pytest.raises(ValidationError):
        as_vector([float("inf")])


def test_softmax_is_a_shifted_probability_vector():
    scores = np.array([0.3, -1.2, 2.0])
    probs = softmax(scores)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(probs > 0)
    assert np.allclose(probs, softmax(scores + 123.456), atol=1e-12)
    assert np.allclose(softmax(np.zeros(4)), 0.25)


def test_cosine_hand_values():
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert cosine(np.array([2.0, 0.0]), np.array([1.0, 0.0])) == 1.0
    assert cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(
        0.7071, abs=1e-4)
    # drift past 1 from rounding is clipped
    assert cosine(np.array([0.1, 0.1, 0.1]), np.array([0.1, 0.1, 0.1])) <= 1.0


def test_table_stores_and_returns_vectors():
    table = EmbeddingTable(2)
    table.set_concept("a", [1.0, 2.0])
    table.set_relation("related", [0.0, 1.0])
    table.set_tree("t", [3.0, 4.0])
    assert table.concept("a").tolist() == [1.0, 2.0]
    assert table.relation("related").tolist() == [0.0, 1.0]
    assert table.tree("t").tolist() == [3.0, 4.0]


def test_table_errors_name_the_missing_key():
    table = EmbeddingTable(2)
    with pytest.raises(MissingEmbeddingError, match="concept 'a'"):
        table.concept("a")
    with pytest.raises(MissingEmbeddingError, match="relation kind 'related'"):
        table.relation("related")
    with pytest.raises(MissingEmbeddingError, match="tree 't'"):
        table.tree("t")


def test_table_enforces_dimension():
    table = EmbeddingTable(2)
    with pytest.raises(DimensionError):
        table.set_concept("a", [1.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        EmbeddingTable(0)


def test_table_equality_is_bit_exact():
    left = EmbeddingTable(2, {"a": np.array([1.0, 2.0])})
    right = EmbeddingTable(2, {"a": np.array([1.0, 2.0])})
    assert left == right
    right.set_concept("a", [1.0, np.nextafter(2.0, 3.0)])
    assert left != right
    assert left != EmbeddingTable(2)


@pytest.mark.parametrize("bad", [
    {"d": 0},
    {"margin": 0.0},
    {"margin": -1.0},
    {"lambda_s": -0.1},
    {"lambda_u": -0.1},
    {"learning_rate": 0.0},
    {"epochs": -1},
    {"negatives_per_edge": 0},
    {"init_scale": 0.0},
])
def test_train_config_field_validation(bad):
    with pytest.raises(ValidationError):
        TrainConfig(**bad)


def test_layer_params_validation():
    with pytest.raises(DimensionError):
        GnnLayerParams(np.eye(2), np.eye(3), np.zeros(2))
    with pytest.raises(ValidationError):
        GnnLayerParams(np.eye(2), np.eye(2), np.zeros(2), "sigmoid")
    with pytest.raises(ValidationError):
        GnnLayerParams(np.full((2, 2), np.nan), np.eye(2), np.zeros(2))


def test_layer_without_neighbors_passes_input_through_identity_params():
    params = GnnLayerParams.identity(3)
    prev = np.array([0.5, -1.0, 2.0])
    assert np.array_equal(gnn_layer(prev, [], params), prev)


def test_layer_averages_neighbor_messages():
    params = GnnLayerParams(np.zeros((2, 2)), np.eye(2), np.zeros(2), "identity")
    out = gnn_layer(np.array([9.0, 9.0]),
                    [np.array([1.0, 0.0]), np.array([0.0, 1.0])], params)
    assert out.tolist() == [0.5, 0.5]


def test_layer_is_neighbor_order_invariant():
    rng = np.random.default_rng(3)
    params = GnnLayerParams(rng.normal(size=(3, 3)), rng.normal(size=(3, 3)),
                            rng.normal(size=3), "tanh")
    prev = rng.normal(size=3)
    neighbors = [rng.normal(size=3) for _ in range(5)]
    forward = gnn_layer(prev, neighbors, params)
    backward = gnn_layer(prev, list(reversed(neighbors)), params)
    assert np.allclose(forward, backward, atol=1e-12)


def test_layer_applies_the_configured_nonlinearity():
    prev = np.array([10.0, -10.0])
    tanh = GnnLayerParams(np.eye(2), np.zeros((2, 2)), np.zeros(2), "tanh")
    relu = GnnLayerParams(np.eye(2), np.zeros((2, 2)), np.zeros(2), "relu")
    assert np.allclose(gnn_layer(prev, [], tanh), np.tanh(prev))
    assert gnn_layer(prev, [], relu).tolist() == [10.0, 0.0]


def test_layer_checks_neighbor_dimensions():
    params = GnnLayerParams.identity(2)
    with pytest.raises(DimensionError):
        gnn_layer(np.zeros(2), [np.zeros(3)], params)


def test_propagate_zero_layers_copies_the_table():
    tree = make_tree("t", {"a": None, "b": "a"})
    table = EmbeddingTable(2, {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])})
    out = propagate(tree, table, GnnLayerParams.identity(2), layers=0)
    assert np.array_equal(out["a"], table.concept("a"))
    assert np.array_equal(out["b"], table.concept("b"))


def test_propagate_single_layer_matches_manual_updates():
    tree = make_tree("t", {"a": None, "b": "a", "c": "a"})
    rng = np.random.default_rng(8)
    table = EmbeddingTable(2, {cid: rng.normal(size=2) for cid in "abc"})
    params = GnnLayerParams(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)),
                            rng.normal(size=2), "tanh")
    out = propagate(tree, table, params, layers=1)
    manual_a = gnn_layer(table.concept("a"),
                         [table.concept("b"), table.concept("c")], params)
    manual_b = gnn_layer(table.concept("b"), [table.concept("a")], params)
    assert np.allclose(out["a"], manual_a, atol=1e-12)
    assert np.allclose(out["b"], manual_b, atol=1e-12)
    # input table untouched
    assert table.concept("a") is not out["a"]


def test_propagate_rejects_negative_layer_count():
    tree = make_tree("t", {"a": None})
    table = EmbeddingTable(2, {"a": np.array([1.0, 0.0])})
    with pytest.raises(ValidationError):
        propagate(tree, table, GnnLayerParams.identity(2), layers=-1)


def test_root_embedding_mean_and_max():
    tree = make_tree("t", {"a": None, "b": "a"})
    table = EmbeddingTable(2, {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])})
    assert root_embedding(tree, table, "mean").tolist() == [0.5, 0.5]
    assert root_embedding(tree, table, "max").tolist() == [1.0, 1.0]


def test_root_embedding_single_concept_is_its_own_vector():
    tree = make_tree("t", {"a": None})
    table = EmbeddingTable(2, {"a": np.array([0.3, -0.7])})
    assert root_embedding(tree, table, "mean").tolist() == [0.3, -0.7]
    assert root_embedding(tree, table, "max").tolist() == [0.3, -0.7]


def test_root_embedding_validates_pooling_and_coverage():
    tree = make_tree("t", {"a": None, "b": "a"})
    table = EmbeddingTable(2, {"a": np.array([1.0, 0.0])})
    with pytest.raises(ValidationError, match="pooling"):
        root_embedding(tree, EmbeddingTable(2, {"a": np.zeros(2), "b": np.zeros(2)}),
                       "sum")
    with pytest.raises(MissingEmbeddingError, match="'b'"):
        root_embedding(tree, table, "mean")
