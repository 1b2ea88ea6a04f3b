"""Influence capacity: normalised two-hop local influence times coreness-degree global influence."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, coreness

__all__ = ["InfluenceScores", "local_influence", "global_influence", "influence_capacity",
           "label_candidates", "candidate_count"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InfluenceScores:
    local: np.ndarray
    global_: np.ndarray
    capacity: np.ndarray


def _local_all(g: Graph) -> np.ndarray:
    p = g.edge_activation_prob
    out_sum = np.bincount(g.edge_src, weights=p, minlength=g.node_count)
    # P(v, u) for every edge (u, v): the back-edge term excluded from the two-hop sum
    back = np.zeros(g.num_edges)
    if g.num_edges:
        keys = g.edge_src * g.node_count + g.edge_dst  # sorted: CSR order
        rev = g.edge_dst * g.node_count + g.edge_src
        pos = np.minimum(np.searchsorted(keys, rev), g.num_edges - 1)
        hit = keys[pos] == rev
        back[hit] = p[pos[hit]]
    two_hop = np.bincount(g.edge_src, weights=p * (out_sum[g.edge_dst] - back), minlength=g.node_count)
    return 1.0 + out_sum + two_hop


def local_influence(g: Graph, u: int) -> float:
    """``1 + sum_v P(u,v) + sum_v sum_{z != u} P(u,v) P(v,z)`` over out-neighbours."""
    return float(_local_all(g)[u])


def _global_all(g: Graph, cores=None) -> np.ndarray:
    cores = coreness(g) if cores is None else np.asarray(cores)
    deg = g.degree()
    d_max = deg.max() if deg.size else 0
    if d_max == 0:
        return cores.astype(np.float64)
    return cores * (1.0 + deg / d_max)


def global_influence(g: Graph, u: int, cores=None) -> float:
    """``coreness(u) * (1 + degree(u) / max_degree)``."""
    return float(_global_all(g, cores)[u])


def influence_capacity(g: Graph) -> InfluenceScores:
    local = _local_all(g)
    glob = _global_all(g)
    if glob.max() <= 0:
        log.warning("graph %s has no edges; influence capacity set to 0", g.graph_id)
        cap = np.zeros(g.node_count)
    else:
        cap = (local / local.max()) * (glob / glob.max())
    return InfluenceScores(local, glob, cap)


def candidate_count(n: int, fraction: float) -> int:
    # guard against 0.2 * 15 == 3.0000000000000004
    return min(n, max(1, math.ceil(round(fraction * n, 9))))


def label_candidates(scores, fraction: float = 0.2) -> np.ndarray:
    """1 for the top ``ceil(fraction * n)`` nodes by capacity (ties to lower id), else 0."""
    cap = scores.capacity if isinstance(scores, InfluenceScores) else np.asarray(scores)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction {fraction} outside (0, 1)")
    n = len(cap)
    order = np.lexsort((np.arange(n), -cap))
    labels = np.zeros(n, dtype=np.int64)
    labels[order[:candidate_count(n, fraction)]] = 1
    return labels
