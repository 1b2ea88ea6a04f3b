import numpy as np
import pytest
from hypothesis import given, strategies as st

from aimkit.centrality import (candidate_count, global_influence, influence_capacity, label_candidates,
                               local_influence)
from aimkit.graph import Graph, assign_activation_params, coreness, generate_plc

from conftest import random_digraph, undirected


def local_oracle(g, u):
    """Explicit one- and two-hop path sums."""
    total = 1.0
    for v in g.out_neighbors(u):
        puv = g.activation_prob(u, v)
        total += puv
        for z in g.out_neighbors(v):
            if z != u:
                total += puv * g.activation_prob(v, z)
    return total


def test_star_local_and_global(star):
    assert local_influence(star, 0) == pytest.approx(2.5, abs=1e-12)
    assert local_influence(star, 1) == pytest.approx(2.0, abs=1e-12)
    cores = coreness(star)
    assert global_influence(star, 0, cores) == pytest.approx(2.0, abs=1e-12)
    assert global_influence(star, 2, cores) == pytest.approx(4 / 3, abs=1e-12)


def test_isolated_node_local_influence():
    assert local_influence(Graph(3, [(0, 1)], [0.5]), 2) == 1.0


def test_triangle_global(triangle):
    assert [global_influence(triangle, u) for u in range(3)] == [4.0, 4.0, 4.0]


def test_star_capacity(star):
    cap = influence_capacity(star).capacity
    assert cap[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(cap[1:], (2.0 / 2.5) * ((4 / 3) / 2.0), atol=1e-12)


def test_complete_graph_capacity_is_uniform():
    g = undirected(5, [(a, b) for a in range(5) for b in range(a + 1, 5)], weight=0.3, ps=0.2)
    np.testing.assert_allclose(influence_capacity(g).capacity, 1.0, atol=1e-12)


def test_degenerate_graphs_get_zero_capacity():
    assert influence_capacity(Graph(1, [])).capacity.tolist() == [0.0]
    assert influence_capacity(Graph(4, [])).capacity.tolist() == [0.0] * 4


@given(st.integers(0, 2**31), st.integers(2, 9))
def test_local_influence_matches_path_sums(seed, n):
    g = random_digraph(np.random.default_rng(seed), n, 30)
    for u in range(n):
        assert local_influence(g, u) == pytest.approx(local_oracle(g, u), abs=1e-12)
        assert local_influence(g, u) >= 1.0


def test_label_counts_and_ties(star):
    assert label_candidates(np.linspace(0, 1, 10), 0.2).sum() == 2
    assert np.flatnonzero(label_candidates(np.ones(10), 0.2)).tolist() == [0, 1]
    assert np.flatnonzero(label_candidates(influence_capacity(star), 0.25)).tolist() == [0]


@given(st.integers(1, 400), st.floats(0.01, 0.99))
def test_candidate_count_is_ceiling(n, fraction):
    labels = label_candidates(np.random.default_rng(n).random(n), fraction)
    assert labels.sum() == candidate_count(n, fraction)
    assert candidate_count(15, 0.2) == 3


@given(st.integers(0, 2**31))
def test_capacity_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    g = assign_activation_params(generate_plc(40, 2, 0.5, seed % 1000), rng_seed=seed)
    perm = rng.permutation(g.node_count)
    a, b = influence_capacity(g), influence_capacity(g.relabel(perm))
    for x, y in ((a.local, b.local), (a.global_, b.global_), (a.capacity, b.capacity)):
        np.testing.assert_allclose(y[perm], x, rtol=0, atol=1e-12)
    # each normalised factor peaks at 1; their product need not
    assert (a.local / a.local.max()).max() == 1.0 and (a.global_ / a.global_.max()).max() == 1.0
    assert 0.0 <= a.capacity.min() and a.capacity.max() <= 1.0
