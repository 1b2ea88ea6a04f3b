"""Independent-cascade diffusion with intrinsic seed activation.

Monte-Carlo estimates run through a compiled kernel whose coins are derived from
``(rng_seed, trial index, edge or seed slot)``.  Two seed sets evaluated with the same
``rng_seed`` therefore share their live-edge worlds, which is what ``marginal_gain``
and the greedy baselines rely on.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import CapacityError, ParameterError
from .graph import Graph

__all__ = [
    "SeedMode",
    "SpreadEstimate",
    "TrialStream",
    "simulate_once",
    "spread_counts",
    "expected_spread",
    "exact_spread",
    "marginal_gain",
    "EXACT_EDGE_LIMIT",
]

EXACT_EDGE_LIMIT = 20
EXACT_SEED_LIMIT = 16


class SeedMode(enum.Enum):
    DETERMINISTIC = "deterministic"
    INTRINSIC = "intrinsic"

    @classmethod
    def parse(cls, value) -> "SeedMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class SpreadEstimate:
    mean_spread: float
    trials: int
    normalized: float


@dataclass(frozen=True)
class TrialStream:
    """One counter-based random stream: trial ``index`` under master seed ``seed``."""
    seed: int
    index: int = 0


def _key(rng_seed) -> np.uint64:
    return np.uint64(int(rng_seed) & 0xFFFFFFFFFFFFFFFF)


def _seed_array(g: Graph, seeds) -> np.ndarray:
    arr = np.fromiter((int(s) for s in seeds), dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= g.node_count):
        bad = arr[(arr < 0) | (arr >= g.node_count)][0]
        raise ParameterError(f"unknown seed node {bad}")
    return np.unique(arr)


def spread_counts(g: Graph, seeds: Iterable[int], mode=SeedMode.DETERMINISTIC, trials: int = 1000,
                  rng_seed: int = 0, trial_start: int = 0) -> np.ndarray:
    """Per-trial activated counts (the raw samples behind ``expected_spread``)."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    mode = SeedMode.parse(mode)
    s = _seed_array(g, seeds)
    return _kernels.spread_trials(
        g.out_ptr, g.edge_dst, g.edge_activation_prob, s, g.intrinsic_prob,
        mode is SeedMode.INTRINSIC, _key(rng_seed), int(trial_start), int(trials))


def simulate_once(g: Graph, seeds: Iterable[int], mode=SeedMode.DETERMINISTIC, rng=None) -> int:
    """Run one cascade and return the number of activated nodes.

    ``rng`` is a :class:`TrialStream`, an integer master seed (trial 0) or a
    ``numpy.random.Generator`` from which a fresh master seed is drawn.
    """
    if rng is None:
        rng = TrialStream(0, 0)
    elif isinstance(rng, np.random.Generator):
        rng = TrialStream(int(rng.integers(0, 2**63)), 0)
    elif not isinstance(rng, TrialStream):
        rng = TrialStream(int(rng), 0)
    return int(spread_counts(g, seeds, mode, 1, rng.seed, rng.index)[0])


def expected_spread(g: Graph, seeds: Iterable[int], mode=SeedMode.DETERMINISTIC, trials: int = 1000,
                    rng_seed: int = 0) -> SpreadEstimate:
    counts = spread_counts(g, seeds, mode, trials, rng_seed)
    # integer total, so the mean does not depend on summation order
    mean = int(counts.sum()) / trials
    return SpreadEstimate(mean, int(trials), mean / g.node_count)


def marginal_gain(g: Graph, s: Iterable[int], a: int, mode=SeedMode.DETERMINISTIC, trials: int = 200,
                  rng_seed: int = 0) -> float:
    """``E[spread(s + a)] - E[spread(s)]`` estimated on paired trials."""
    base = set(int(x) for x in s)
    if int(a) in base:
        raise ParameterError(f"node {a} already in the seed set")
    with_a = spread_counts(g, base | {int(a)}, mode, trials, rng_seed)
    without = spread_counts(g, base, mode, trials, rng_seed) if base else np.zeros(trials, dtype=np.int64)
    return int((with_a - without).sum()) / trials


# ---- exact oracle ---------------------------------------------------------------

def _world_table(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """All live-edge worlds: ``(probability[W], live[W, E])``."""
    m = g.num_edges
    if m > EXACT_EDGE_LIMIT:
        raise CapacityError(f"{m} edges exceeds exact enumeration limit {EXACT_EDGE_LIMIT}")
    worlds = np.arange(1 << m, dtype=np.int64)
    live = ((worlds[:, None] >> np.arange(m)) & 1).astype(bool)
    p = g.edge_activation_prob
    prob = np.prod(np.where(live, p, 1.0 - p), axis=1) if m else np.ones(1)
    return prob, live


def _reachable(g: Graph, live: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Boolean ``[W, n]`` of nodes reached from ``start[W, n]`` over live edges."""
    active = start.copy()
    src, dst = g.edge_src, g.edge_dst
    for _ in range(g.node_count):
        grown = active.copy()
        for e in range(g.num_edges):
            grown[:, dst[e]] |= active[:, src[e]] & live[:, e]
        if np.array_equal(grown, active):
            break
        active = grown
    return active


def exact_spread(g: Graph, seeds: Iterable[int], mode=SeedMode.DETERMINISTIC) -> float:
    """Expected spread by enumerating every live-edge world (and seed outcome)."""
    mode = SeedMode.parse(mode)
    s = [int(x) for x in _seed_array(g, seeds)]
    if not s:
        return 0.0
    if mode is SeedMode.INTRINSIC and len(s) > EXACT_SEED_LIMIT:
        raise CapacityError(f"{len(s)} seeds exceeds exact enumeration limit {EXACT_SEED_LIMIT}")
    prob, live = _world_table(g)
    if mode is SeedMode.DETERMINISTIC:
        outcomes = [(1.0, s)]
    else:
        ps = g.intrinsic_prob
        outcomes = []
        for bits in itertools.product((0, 1), repeat=len(s)):
            w = 1.0
            for b, x in zip(bits, s):
                w *= ps[x] if b else 1.0 - ps[x]
            if w > 0:
                outcomes.append((w, [x for b, x in zip(bits, s) if b]))
    total = 0.0
    for w, active_seeds in outcomes:
        if not active_seeds:
            continue
        start = np.zeros((len(prob), g.node_count), dtype=bool)
        start[:, active_seeds] = True
        sizes = _reachable(g, live, start).sum(axis=1)
        total += w * float(prob @ sizes)
    return total
