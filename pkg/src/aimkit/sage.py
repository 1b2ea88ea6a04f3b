"""GraphSAGE-style encoder (full neighbourhood, mean or max aggregation) with exact backward.

Layer ``l`` computes, for every node ``u``::

    h_u = relu(W_self h_u' + W_neigh agg{h_v' : v in N(u)} + b)

where ``N(u)`` is the union of in- and out-neighbours and the aggregate of an empty
neighbourhood is the zero vector.  Max aggregation and max pooling route gradient to
the winning row; ties go to the lowest node id.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import ContractViolation
from .graph import Graph, coreness
from .nn import glorot

__all__ = [
    "NUM_FEATURES", "SageLayer", "SageParams", "EmbeddingSet", "compute_features",
    "encode", "encode_forward", "encode_backward", "set_embedding", "graph_embedding",
    "max_pool", "max_pool_backward",
]

NUM_FEATURES = 5


@dataclass
class SageLayer:
    w_self: np.ndarray   # (out, in)
    w_neigh: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)


@dataclass
class SageParams:
    layers: list
    aggregator: str = "mean"

    @classmethod
    def init(cls, rng: np.random.Generator, in_dim: int, widths, aggregator: str = "mean") -> "SageParams":
        if aggregator not in ("mean", "max"):
            raise ValueError(f"unknown aggregator {aggregator!r}")
        layers, d = [], in_dim
        for w in widths:
            # glorot over the concatenated [self || neigh] input
            full = glorot(rng, w, 2 * d)
            layers.append(SageLayer(full[:, :d].copy(), full[:, d:].copy(), np.zeros(w)))
            d = w
        return cls(layers, aggregator)

    @property
    def widths(self) -> list[int]:
        return [l.bias.shape[0] for l in self.layers]

    @property
    def in_dim(self) -> int:
        return self.layers[0].w_self.shape[1]

    def params(self) -> list[np.ndarray]:
        out = []
        for l in self.layers:
            out += [l.w_self, l.w_neigh, l.bias]
        return out

    def copy(self) -> "SageParams":
        return SageParams([SageLayer(l.w_self.copy(), l.w_neigh.copy(), l.bias.copy()) for l in self.layers],
                          self.aggregator)


@dataclass
class EmbeddingSet:
    vectors: np.ndarray  # (n, d)
    feature_dim: int

    def __getitem__(self, u):
        return self.vectors[u]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


# ---- input features --------------------------------------------------------------

def _clustering(g: Graph) -> np.ndarray:
    ptr, idx = g.undirected
    n = g.node_count
    A = sp.csr_matrix((np.ones(len(idx)), idx, ptr), shape=(n, n))
    closed = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel()  # 2 * triangles at node
    d = np.diff(ptr).astype(np.float64)
    denom = d * (d - 1)
    return np.divide(closed, denom, out=np.zeros(n), where=denom > 0)


def compute_features(g: Graph) -> np.ndarray:
    """Per node: ``[degree/max degree, p_s, coreness/max coreness, clustering, 1]``."""
    if "features" in g.derived:
        return g.derived["features"]
    deg = g.degree().astype(np.float64)
    core = coreness(g).astype(np.float64)
    n = g.node_count
    f = np.empty((n, NUM_FEATURES))
    f[:, 0] = deg / deg.max() if deg.max() > 0 else 0.0
    f[:, 1] = g.intrinsic_prob
    f[:, 2] = core / core.max() if core.max() > 0 else 0.0
    f[:, 3] = _clustering(g)
    f[:, 4] = 1.0
    f.flags.writeable = False
    g.derived["features"] = f
    return f


# ---- aggregation -------------------------------------------------------------------

def _mean_matrix(g: Graph) -> sp.csr_matrix:
    if "mean_agg" not in g.derived:
        ptr, idx = g.undirected
        deg = np.diff(ptr)
        vals = np.repeat(1.0 / np.maximum(deg, 1), deg)
        M = sp.csr_matrix((vals, idx, ptr), shape=(g.node_count, g.node_count))
        g.derived["mean_agg"] = (M, M.T.tocsr())
    return g.derived["mean_agg"]


def _max_aggregate(g: Graph, H: np.ndarray):
    """Neighbour-wise max and the winning neighbour per (node, feature); -1 where no neighbour.

    Neighbour lists are sorted, so strict ``>`` keeps the lowest id on ties.
    """
    ptr, idx = g.undirected
    return _kernels.segment_max(ptr, idx, np.ascontiguousarray(H))


@dataclass
class _EncodeCache:
    graph_id: int
    params_id: tuple
    inputs: list
    neigh: list
    winners: list
    pre: list


def encode_forward(g: Graph, feats: np.ndarray, params: SageParams):
    H = np.asarray(feats, dtype=np.float64)
    if H.shape != (g.node_count, params.in_dim):
        raise ContractViolation(f"features {H.shape} do not match ({g.node_count}, {params.in_dim})")
    cache = _EncodeCache(id(g), tuple(id(a) for a in params.params()), [], [], [], [])
    for layer in params.layers:
        if params.aggregator == "mean":
            N = _mean_matrix(g)[0] @ H
            win = None
        else:
            N, win = _max_aggregate(g, H)
        Z = H @ layer.w_self.T + N @ layer.w_neigh.T + layer.bias
        cache.inputs.append(H)
        cache.neigh.append(N)
        cache.winners.append(win)
        cache.pre.append(Z)
        H = np.maximum(Z, 0.0)
    return H, cache


def encode(g: Graph, feats: np.ndarray, params: SageParams) -> EmbeddingSet:
    H, _ = encode_forward(g, feats, params)
    return EmbeddingSet(H, params.in_dim)


def encode_backward(g: Graph, params: SageParams, cache: _EncodeCache, grad_out: np.ndarray):
    """Gradients of all encoder parameters (aligned with ``params.params()``) and of the input features."""
    if cache.graph_id != id(g) or cache.params_id != tuple(id(a) for a in params.params()):
        raise ContractViolation("encoder cache is stale for this graph/parameter set")
    G = np.asarray(grad_out, dtype=np.float64)
    grads = []
    for i in reversed(range(len(params.layers))):
        layer = params.layers[i]
        gZ = G * (cache.pre[i] > 0)
        H, N = cache.inputs[i], cache.neigh[i]
        grads.append((gZ.T @ H, gZ.T @ N, gZ.sum(axis=0)))
        G = gZ @ layer.w_self
        gN = gZ @ layer.w_neigh
        if params.aggregator == "mean":
            G = G + _mean_matrix(g)[1] @ gN
        else:
            G = np.ascontiguousarray(G)
            _kernels.scatter_winners(cache.winners[i], np.ascontiguousarray(gN), G)
    flat = []
    for t in reversed(grads):
        flat += list(t)
    return flat, G


# ---- pooling -----------------------------------------------------------------------

def max_pool(H: np.ndarray, rows) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise max over ``H[rows]`` and the winning row per feature (lowest id on ties).

    An empty ``rows`` gives the zero vector and winners of -1.
    """
    rows = np.unique(np.asarray(rows, dtype=np.int64))
    if rows.size == 0:
        return np.zeros(H.shape[1]), np.full(H.shape[1], -1, dtype=np.int64)
    sub = H[rows]
    arg = np.argmax(sub, axis=0)
    return sub[arg, np.arange(H.shape[1])], rows[arg]


def max_pool_backward(grad: np.ndarray, winners: np.ndarray, out: np.ndarray) -> None:
    """Accumulate the pooled-vector gradient into ``out`` (rows x features) in place."""
    mask = winners >= 0
    out[winners[mask], np.flatnonzero(mask)] += grad[mask]


def set_embedding(emb: EmbeddingSet, s) -> np.ndarray:
    """Elementwise max of the member embeddings; zero vector for the empty set."""
    return max_pool(emb.vectors, list(s))[0]


def graph_embedding(emb: EmbeddingSet) -> np.ndarray:
    return emb.vectors.max(axis=0)
