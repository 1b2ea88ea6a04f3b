import numpy as np
import pytest
from hypothesis import given, strategies as st

from aimkit.errors import ContractViolation
from aimkit.graph import Graph, assign_activation_params, generate_plc
from aimkit.nn import finite_diff_check
from aimkit.sage import (NUM_FEATURES, EmbeddingSet, SageParams, compute_features, encode, encode_backward,
                         encode_forward, graph_embedding, max_pool, max_pool_backward, set_embedding)

from conftest import undirected


def small_graph(seed, n=25):
    return assign_activation_params(generate_plc(n, 2, 0.5, seed), rng_seed=seed + 1)


def test_features_fixtures(star):
    g = Graph(3, [(0, 1), (1, 0)], [1.0, 1.0], [0.2, 0.3, 0.7])
    np.testing.assert_array_equal(compute_features(g)[2], [0, 0.7, 0, 0, 1])
    k4 = undirected(4, [(a, b) for a in range(4) for b in range(a + 1, 4)], ps=0.5)
    f = compute_features(k4)
    assert all(np.array_equal(f[0], f[i]) for i in range(4))
    f = compute_features(star)
    assert f[0, 0] == 1.0 and f[1, 0] == pytest.approx(1 / 3)
    assert f.shape == (4, NUM_FEATURES) and f.min() >= 0 and f.max() <= 1


def test_clustering_feature_on_triangle_with_tail():
    g = undirected(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    np.testing.assert_allclose(compute_features(g)[:, 3], [1.0, 1.0, 1 / 3, 0.0])


@pytest.mark.parametrize("agg", ["mean", "max"])
def test_edgeless_graph_uses_self_features_only(agg):
    rng = np.random.default_rng(0)
    g = Graph(4, [], intrinsic=[0.1, 0.2, 0.3, 0.4])
    params = SageParams.init(rng, NUM_FEATURES, [6], agg)
    params.layers[0].bias[:] = 0.3
    feats = compute_features(g)
    expected = np.maximum(feats @ params.layers[0].w_self.T + 0.3, 0)
    np.testing.assert_allclose(encode(g, feats, params).vectors, expected)


@pytest.mark.parametrize("agg", ["mean", "max"])
def test_encode_permutation_equivariance(agg):
    g = small_graph(3, 40)
    rng = np.random.default_rng(1)
    params = SageParams.init(rng, NUM_FEATURES, [16, 8, 4], agg)
    perm = rng.permutation(g.node_count)
    h = g.relabel(perm)
    a = encode(g, compute_features(g), params).vectors
    b = encode(h, compute_features(h), params).vectors
    np.testing.assert_allclose(b[perm], a, rtol=0, atol=1e-12)


@pytest.mark.parametrize("agg", ["mean", "max"])
def test_isomorphic_leaves_share_embeddings(agg, star):
    params = SageParams.init(np.random.default_rng(2), NUM_FEATURES, [8, 4], agg)
    emb = encode(star, compute_features(star), params).vectors
    np.testing.assert_array_equal(emb[1], emb[2])
    np.testing.assert_array_equal(emb[1], emb[3])


def test_shape_mismatch_raises():
    g = small_graph(0)
    params = SageParams.init(np.random.default_rng(0), 3, [4], "mean")
    with pytest.raises(ContractViolation):
        encode(g, compute_features(g), params)


def test_stale_cache_raises():
    g = small_graph(0)
    params = SageParams.init(np.random.default_rng(0), NUM_FEATURES, [4], "mean")
    H, cache = encode_forward(g, compute_features(g), params)
    with pytest.raises(ContractViolation):
        encode_backward(g, params.copy(), cache, np.ones_like(H))


@given(st.integers(0, 2**31), st.sampled_from(["mean", "max"]))
def test_encoder_gradients_match_finite_differences(seed, agg):
    rng = np.random.default_rng(seed)
    g = small_graph(seed % 97, 18)
    params = SageParams.init(rng, NUM_FEATURES, [7, 5, 3], agg)
    for layer in params.layers:
        layer.bias[:] = rng.normal(scale=0.1, size=layer.bias.shape)
    # jitter breaks exact ties between neighbours, where max aggregation has no derivative
    feats = compute_features(g) + rng.normal(scale=1e-2, size=(g.node_count, NUM_FEATURES))
    R = rng.normal(size=(g.node_count, 3))

    def loss_and_grad():
        H, cache = encode_forward(g, feats, params)
        grads, gfeat = encode_backward(g, params, cache, R)
        return float(np.sum(R * H)), grads + [gfeat]

    report = finite_diff_check(loss_and_grad, params.params() + [feats], max_entries=12, rng=rng)
    assert report.passed, report.per_param


# ---- pooling --------------------------------------------------------------------------------

def test_set_and_graph_embeddings():
    emb = EmbeddingSet(np.array([[1.0, -2.0], [0.0, 5.0], [0.5, 0.5]]), 2)
    np.testing.assert_array_equal(set_embedding(emb, [1]), [0.0, 5.0])
    np.testing.assert_array_equal(set_embedding(emb, [0, 1]), [1.0, 5.0])
    np.testing.assert_array_equal(set_embedding(emb, [0, 1, 0, 1]), set_embedding(emb, [0, 1]))
    np.testing.assert_array_equal(set_embedding(emb, []), [0.0, 0.0])
    np.testing.assert_array_equal(graph_embedding(emb), set_embedding(emb, range(3)))
    one = EmbeddingSet(np.array([[0.2, 0.7]]), 2)
    np.testing.assert_array_equal(graph_embedding(one), [0.2, 0.7])


@given(st.integers(0, 2**31))
def test_graph_embedding_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(9, 4))
    perm = rng.permutation(9)
    assert np.array_equal(graph_embedding(EmbeddingSet(V, 4)), graph_embedding(EmbeddingSet(V[perm], 4)))


def test_max_pool_ties_and_backward():
    H = np.array([[1.0, 2.0], [1.0, 3.0], [0.0, 3.0]])
    vec, win = max_pool(H, [2, 1, 0])
    np.testing.assert_array_equal(vec, [1.0, 3.0])
    np.testing.assert_array_equal(win, [0, 1])
    out = np.zeros_like(H)
    max_pool_backward(np.array([0.5, -1.0]), win, out)
    np.testing.assert_array_equal(out, [[0.5, 0.0], [0.0, -1.0], [0.0, 0.0]])
