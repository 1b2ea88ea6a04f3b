"""Greedy hill climbing (GHC), its intrinsic-activation variant (MGHC) and an exhaustive oracle."""
from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable

import numpy as np

from .diffusion import EXACT_EDGE_LIMIT, SeedMode, exact_spread, spread_counts
from .errors import CapacityError, ConfigError
from .graph import Graph

__all__ = ["ghc", "mghc", "greedy", "exhaustive_optimal", "EXHAUSTIVE_SUBSET_LIMIT"]

EXHAUSTIVE_SUBSET_LIMIT = 100_000


def greedy(g: Graph, b: int, search_space: Iterable[int] | None, value: Callable[[list], float]) -> list:
    """Add, ``b`` times, the node whose inclusion maximises ``value(seeds)``; ties go to the lower id.

    ``value`` should score every set on the same random worlds so that differences
    between candidates are not drowned in sampling noise.
    """
    space = np.arange(g.node_count) if search_space is None else np.unique(np.asarray(list(search_space), dtype=np.int64))
    if b < 0 or len(space) < b:
        raise ConfigError(f"search space of {len(space)} nodes cannot fill budget {b}")
    seeds: list[int] = []
    chosen = set()
    for _ in range(b):
        best, best_val = None, -math.inf
        for c in space.tolist():
            if c in chosen:
                continue
            v = value(seeds + [c])
            if v > best_val:
                best, best_val = c, v
        seeds.append(best)
        chosen.add(best)
    return seeds


def ghc(g: Graph, b: int, search_space=None, trials: int = 200, rng_seed: int = 0, spread_fn=None) -> list:
    """Greedy seeds by marginal spread with deterministic seed activation.

    ``spread_fn(seeds) -> float`` replaces the Monte-Carlo estimate (e.g. with
    :func:`aimkit.diffusion.exact_spread`).
    """
    if spread_fn is None:
        def spread_fn(seeds):
            return int(spread_counts(g, seeds, SeedMode.DETERMINISTIC, trials, rng_seed).sum())
    return greedy(g, b, search_space, spread_fn)


def mghc(g: Graph, b: int, search_space=None, M: int = 200, rng_seed: int = 0, spread_fn=None) -> list:
    """Greedy seeds where every evaluated set's seeds only activate with their own ``p_s``."""
    if M < 1:
        raise ConfigError("M must be >= 1")
    if spread_fn is None:
        def spread_fn(seeds):
            return int(spread_counts(g, seeds, SeedMode.INTRINSIC, M, rng_seed).sum())
    return greedy(g, b, search_space, spread_fn)


def exhaustive_optimal(g: Graph, b: int, mode=SeedMode.DETERMINISTIC) -> tuple[list, float]:
    """Best ``b``-subset by exact spread; ties go to the lexicographically smallest set."""
    if g.num_edges > EXACT_EDGE_LIMIT:
        raise CapacityError(f"{g.num_edges} edges exceeds exact enumeration limit {EXACT_EDGE_LIMIT}")
    if math.comb(g.node_count, b) > EXHAUSTIVE_SUBSET_LIMIT:
        raise CapacityError(f"C({g.node_count}, {b}) subsets exceeds {EXHAUSTIVE_SUBSET_LIMIT}")
    best, best_val = None, -math.inf
    for combo in itertools.combinations(range(g.node_count), b):
        v = exact_spread(g, combo, mode)
        if v > best_val:
            best, best_val = list(combo), v
    return best, best_val
