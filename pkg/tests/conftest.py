import numpy as np
import pytest
from hypothesis import settings

from aimkit.graph import Graph

settings.register_profile("aimkit", deadline=None, max_examples=60)
settings.load_profile("aimkit")


def undirected(n, pairs, weight=1.0, ps=0.0, graph_id=None):
    """Symmetric graph with a constant weight and intrinsic probability."""
    edges = [(a, b) for a, b in pairs] + [(b, a) for a, b in pairs]
    ps = np.full(n, ps) if np.isscalar(ps) else np.asarray(ps, dtype=float)
    return Graph(n, edges, [weight] * len(edges), ps, graph_id=graph_id)


def with_activation(n, edges, probs, ps=None, graph_id=None):
    """Directed graph whose activation probabilities equal ``probs`` (p_s = 0 unless given)."""
    ps = np.zeros(n) if ps is None else np.asarray(ps, dtype=float)
    w = [p / (1.0 - ps[d]) for p, (_, d) in zip(probs, edges)]
    return Graph(n, edges, w, ps, graph_id=graph_id)


def random_digraph(rng, n, max_edges, ps_range=(0.0, 1.0)):
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    k = int(rng.integers(0, min(max_edges, len(pairs)) + 1))
    chosen = rng.choice(len(pairs), size=k, replace=False) if k else []
    edges = [pairs[i] for i in chosen]
    return Graph(n, edges, rng.uniform(0, 1, len(edges)), rng.uniform(*ps_range, n))


@pytest.fixture
def star():
    """K_{1,3} with every activation probability 0.5 (weights 0.5, p_s 0)."""
    return undirected(4, [(0, 1), (0, 2), (0, 3)], weight=0.5)


@pytest.fixture
def triangle():
    return undirected(3, [(0, 1), (1, 2), (0, 2)], weight=1.0)


# ---- acceptance report ----------------------------------------------------------------------

ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    """Store one acceptance outcome; the terminal summary prints them in order."""
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
