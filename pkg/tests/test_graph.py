import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aimkit.errors import GraphParseError, GraphValidationError, ParameterError
from aimkit.graph import (Graph, assign_activation_params, coreness, generate, generate_ba, generate_plc,
                          generate_sbm, load_graph, parse_graph, save_graph)

from conftest import undirected


def adjacency_sets(g):
    adj = [set() for _ in range(g.node_count)]
    for s, d in g.edges():
        adj[s].add(d)
        adj[d].add(s)
    return adj


def mean_clustering(g):
    """Triangle-count oracle over neighbour sets."""
    adj = adjacency_sets(g)
    total = 0.0
    for u, nb in enumerate(adj):
        k = len(nb)
        if k < 2:
            continue
        links = sum(1 for a in nb for b in nb if a < b and b in adj[a])
        total += 2.0 * links / (k * (k - 1))
    return total / g.node_count


def peel_oracle(g):
    """Repeatedly strip nodes of degree < k, for k = 1, 2, ..."""
    adj = adjacency_sets(g)
    alive = set(range(g.node_count))
    core = [0] * g.node_count
    k = 0
    while alive:
        k += 1
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if len(adj[u] & alive) < k:
                    alive.remove(u)
                    core[u] = k - 1
                    changed = True
    return core


# ---- construction and invariants ------------------------------------------------------------

def test_graph_rejects_self_loops_duplicates_and_range():
    with pytest.raises(GraphValidationError):
        Graph(2, [(0, 0)])
    with pytest.raises(GraphValidationError):
        Graph(2, [(0, 1), (0, 1)])
    with pytest.raises(GraphValidationError):
        Graph(2, [(0, 1)], [1.2])
    with pytest.raises(GraphValidationError):
        Graph(2, [(0, 1)], [0.5], [0.1, -0.1])


def test_adjacency_and_in_adjacency_agree():
    g = assign_activation_params(generate_plc(60, 2, 0.4, 1), rng_seed=2)
    out_pairs = {(v, int(u)) for v in range(g.node_count) for u in g.out_neighbors(v)}
    in_pairs = {(int(v), u) for u in range(g.node_count) for v in g.in_neighbors(u)}
    assert out_pairs == in_pairs == set(g.edges())


@given(st.integers(2, 12), st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1))
def test_activation_invariant_after_assignment(n, seed, lo, width):
    rng = np.random.default_rng(seed)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4]
    g = undirected(n, pairs)
    hi = min(1.0, lo + width)
    g = assign_activation_params(g, {"dist": "uniform", "low": lo, "high": hi},
                                 {"rule": "uniform"}, rng_seed=seed)
    for (v, u) in g.edges():
        assert g.activation_prob(v, u) == g.weight(v, u) * (1.0 - g.intrinsic_prob[u])
    assert np.all((g.edge_activation_prob >= 0) & (g.edge_activation_prob <= 1))


# ---- generators -----------------------------------------------------------------------------

def test_ba_small_is_triangle():
    g = generate_ba(3, 2, 0)
    assert g.num_edges == 6
    assert set(g.edges()) == {(a, b) for a in range(3) for b in range(3) if a != b}


def test_ba_shape_and_determinism():
    g = generate_ba(200, 4, 7)
    assert g.node_count == 200
    # K5 seed plus 4 links for each of the 195 later nodes, stored both ways
    assert g.num_edges == 2 * (4 * 195 + math.comb(5, 2))
    deg = g.degree()
    assert deg.max() > 3 * deg.mean()
    assert g == generate_ba(200, 4, 7)


@pytest.mark.parametrize("n,m", [(2, 2), (5, 0), (3, 5)])
def test_ba_bad_parameters(n, m):
    with pytest.raises(ParameterError):
        generate_ba(n, m, 0)


def test_plc_without_triads_matches_ba():
    for seed in range(5):
        assert set(generate_plc(120, 3, 0.0, seed).edges()) == set(generate_ba(120, 3, seed).edges())


def test_plc_clusters_more_than_ba():
    assert mean_clustering(generate_plc(500, 3, 0.5, 11)) > mean_clustering(generate_ba(500, 3, 11))


def test_plc_bad_parameters():
    with pytest.raises(ParameterError):
        generate_plc(3, 3, 0.5, 0)
    with pytest.raises(ParameterError):
        generate_plc(10, 2, 1.5, 0)


def test_sbm_trivial_cases():
    g = generate_sbm([3], [[1.0]], 0)
    assert g.num_edges == 6
    g = generate_sbm([3, 3], [[0, 0], [0, 0]], 0)
    assert g.node_count == 6 and g.num_edges == 0


def test_sbm_within_block_count_is_binomial():
    g = generate_sbm([50, 50], [[0.3, 0.01], [0.01, 0.3]], 5)
    src, dst = g.edge_src, g.edge_dst
    within = int(np.sum((src < 50) == (dst < 50))) // 2
    pairs = 2 * math.comb(50, 2)
    mean, sd = 0.3 * pairs, math.sqrt(pairs * 0.3 * 0.7)
    assert abs(within - mean) <= 3 * sd


def test_sbm_rejects_bad_matrix():
    with pytest.raises(ParameterError):
        generate_sbm([2, 2], [[0.1, 0.2], [0.3, 0.1]], 0)
    with pytest.raises(ParameterError):
        generate_sbm([2, 2, 2], [[0.1, 0.2], [0.2, 0.1]], 0)


@pytest.mark.parametrize("family", ["ba", "plc", "sbm"])
def test_generators_symmetrize_and_are_deterministic(family):
    g = generate(family, 150, 3)
    edges = set(g.edges())
    assert all((d, s) in edges for s, d in edges)
    assert g == generate(family, 150, 3)
    assert g != generate(family, 150, 4)


# ---- activation parameters ------------------------------------------------------------------

def test_assign_extremes_and_single_edge():
    g = generate_ba(30, 2, 0)
    zero = assign_activation_params(g, 0.0, 0.7)
    np.testing.assert_array_equal(zero.edge_activation_prob, zero.edge_weight)
    one = assign_activation_params(g, 1.0)
    assert np.all(one.edge_activation_prob == 0.0)
    single = Graph(2, [(0, 1)], [0.8], [0.5, 0.25])
    assert single.activation_prob(0, 1) == pytest.approx(0.6, abs=1e-15)


def test_default_activation_parameters():
    g = assign_activation_params(generate_ba(300, 3, 1), rng_seed=4)
    assert 0.05 <= g.intrinsic_prob.min() and g.intrinsic_prob.max() <= 0.95
    np.testing.assert_allclose(g.edge_weight, 1.0 / g.in_degree()[g.edge_dst])


# ---- coreness --------------------------------------------------------------------------------

def test_coreness_fixtures(triangle, star):
    assert coreness(triangle).tolist() == [2, 2, 2]
    assert coreness(star).tolist() == [1, 1, 1, 1]
    assert coreness(Graph(4, [])).tolist() == [0, 0, 0, 0]


@given(st.integers(1, 50), st.floats(0.0, 0.4), st.integers(0, 2**31))
def test_coreness_matches_peeling(n, density, seed):
    rng = np.random.default_rng(seed)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < density]
    g = undirected(n, pairs)
    assert coreness(g).tolist() == peel_oracle(g)


# ---- file format -----------------------------------------------------------------------------

def test_round_trip(tmp_path):
    g = assign_activation_params(generate_sbm([20, 20], [[0.3, 0.05], [0.05, 0.3]], 2), rng_seed=3)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    h = load_graph(path)
    assert h == g
    save_graph(h, tmp_path / "h.txt")
    assert path.read_text() == (tmp_path / "h.txt").read_text()


def test_load_rejects_bad_files():
    with pytest.raises(GraphValidationError):
        parse_graph("nodes 2\nnode 0 0.5\nnode 1 0.5\nedge 0 1 1.5\n")
    with pytest.raises(GraphParseError):
        parse_graph("nodes 2\nedge 0 1 0.5\n")
    with pytest.raises(GraphParseError) as info:
        parse_graph("nodes 2\nnode 0 0.5\nnode 1 oops\n")
    assert info.value.line_no == 3
