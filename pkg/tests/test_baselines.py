import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aimkit.baselines import exhaustive_optimal, ghc, mghc
from aimkit.diffusion import SeedMode, exact_spread, spread_counts
from aimkit.errors import CapacityError, ConfigError
from aimkit.graph import Graph, assign_activation_params, generate_ba

from conftest import random_digraph, undirected

DET, INT = SeedMode.DETERMINISTIC, SeedMode.INTRINSIC


def exact_fn(g, mode=DET):
    return lambda seeds: exact_spread(g, seeds, mode)


def tiny_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 11))
    return random_digraph(rng, n, min(14, n * (n - 1)), ps_range=(0.05, 0.95))


def test_ghc_star_picks_center():
    star = undirected(5, [(0, i) for i in range(1, 5)], weight=1.0)
    assert ghc(star, 1, spread_fn=exact_fn(star)) == [0]
    assert ghc(star, 1, trials=50) == [0]


def test_ghc_one_seed_per_component():
    g = undirected(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], weight=1.0)
    seeds = ghc(g, 2, spread_fn=exact_fn(g))
    assert {s // 3 for s in seeds} == {0, 1}
    assert sorted(ghc(g, 2, trials=20)) == [0, 3]


def test_ghc_budget_equal_to_search_space():
    g = assign_activation_params(generate_ba(30, 2, 0), rng_seed=1)
    assert sorted(ghc(g, 4, [3, 9, 11, 20], trials=20)) == [3, 9, 11, 20]
    with pytest.raises(ConfigError):
        ghc(g, 5, [3, 9, 11, 20])


def test_mghc_prefers_reliable_seed():
    g = Graph(2, [], intrinsic=[0.9, 0.1])
    assert mghc(g, 1, spread_fn=exact_fn(g, INT)) == [0]
    assert mghc(g, 1, M=500) == [0]
    assert mghc(g, 0) == []


def test_mghc_equals_ghc_when_seeds_always_fire():
    g = assign_activation_params(generate_ba(40, 2, 3), 1.0, 0.6, rng_seed=2)
    assert mghc(g, 4, M=50, rng_seed=9) == ghc(g, 4, trials=50, rng_seed=9)


def test_exhaustive_trivial_cases():
    g = tiny_instance(1)
    seeds, value = exhaustive_optimal(g, g.node_count)
    assert seeds == list(range(g.node_count)) and value == pytest.approx(g.node_count)
    seeds, value = exhaustive_optimal(g, 1)
    singles = [exact_spread(g, [u], DET) for u in range(g.node_count)]
    assert seeds == [int(np.argmax(singles))] and value == max(singles)


def test_exhaustive_limits():
    with pytest.raises(CapacityError):
        exhaustive_optimal(generate_ba(12, 2, 0), 2)
    with pytest.raises(CapacityError):
        exhaustive_optimal(Graph(40, []), 6)  # C(40, 6) > 1e5


@given(st.integers(0, 2**31))
def test_ghc_rounds_are_non_decreasing(seed):
    rng = np.random.default_rng(seed)
    g = random_digraph(rng, 9, 25)
    seeds = ghc(g, 5, trials=100, rng_seed=seed)
    values = [int(spread_counts(g, seeds[:k], DET, 100, seed).sum()) for k in range(6)]
    assert values == sorted(values)


def test_greedy_vs_exhaustive_on_tiny_instances():
    ratio_floor = 1 - 1 / math.e
    equal = 0
    for seed in range(100):
        g = tiny_instance(seed)
        greedy_value = exact_spread(g, ghc(g, 2, spread_fn=exact_fn(g)), DET)
        _, best = exhaustive_optimal(g, 2)
        assert best >= greedy_value - 1e-12
        assert greedy_value >= ratio_floor * best
        equal += abs(best - greedy_value) <= 1e-12
    assert equal >= 60
