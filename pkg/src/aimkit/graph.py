"""Directed activation graphs, synthetic generators, coreness and the text file format.

Every edge ``(v, u)`` carries an interaction weight ``w`` and the target carries an
intrinsic activation probability ``p_s(u)``.  The probability that ``v`` activates
``u`` through influence is always derived, never stored independently::

    p_vu = w_vu * (1 - p_s(u))

Generators produce undirected topologies and store each link as two directed edges.
"""
from __future__ import annotations

import math
import os
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphParseError, GraphValidationError, ParameterError

__all__ = [
    "Graph",
    "generate_ba",
    "generate_plc",
    "generate_sbm",
    "generate",
    "assign_activation_params",
    "coreness",
    "load_graph",
    "save_graph",
]


class Graph:
    """Immutable directed graph with per-node intrinsic and per-edge influence probabilities.

    Edges are kept in CSR order (sorted by source, then target); an edge id is the
    position in that order and is what the diffusion kernels index coins by.
    """

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int]], weights=None,
                 intrinsic=None, graph_id: str | None = None):
        n = int(node_count)
        if n < 1:
            raise GraphValidationError("graph needs at least one node")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        w = np.zeros(len(e)) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
        ps = np.zeros(n) if intrinsic is None else np.asarray(intrinsic, dtype=np.float64).reshape(-1)
        if len(w) != len(e):
            raise GraphValidationError(f"{len(w)} weights for {len(e)} edges")
        if len(ps) != n:
            raise GraphValidationError(f"{len(ps)} intrinsic probabilities for {n} nodes")
        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise GraphValidationError("edge endpoint outside [0, node_count)")
            if np.any(e[:, 0] == e[:, 1]):
                raise GraphValidationError("self-loops are not allowed")
        _check_unit(w, "edge weight")
        _check_unit(ps, "intrinsic probability")

        order = np.lexsort((e[:, 1], e[:, 0]))
        e, w = e[order], w[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise GraphValidationError("duplicate edge")

        self.node_count = n
        self.graph_id = graph_id if graph_id is not None else f"g{n}"
        self.edge_src = _frozen(e[:, 0].copy())
        self.edge_dst = _frozen(e[:, 1].copy())
        self.edge_weight = _frozen(w)
        self.intrinsic_prob = _frozen(ps.copy())
        self.edge_activation_prob = _frozen(w * (1.0 - ps[self.edge_dst]))

        self.out_ptr = _frozen(_indptr(self.edge_src, n))
        in_order = np.lexsort((self.edge_src, self.edge_dst))
        self.in_ptr = _frozen(_indptr(self.edge_dst[in_order], n))
        self.in_idx = _frozen(self.edge_src[in_order])
        self.in_eid = _frozen(in_order.astype(np.int64))
        self.derived: dict = {}  # memo for structures other modules build from the graph

    # ---- basic accessors -------------------------------------------------

    @property
    def out_idx(self) -> np.ndarray:
        return self.edge_dst

    @property
    def num_edges(self) -> int:
        return len(self.edge_src)

    def out_neighbors(self, u: int) -> np.ndarray:
        return self.edge_dst[self.out_ptr[u]:self.out_ptr[u + 1]]

    def in_neighbors(self, u: int) -> np.ndarray:
        return self.in_idx[self.in_ptr[u]:self.in_ptr[u + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.edge_src.tolist(), self.edge_dst.tolist()))

    @cached_property
    def _edge_lookup(self) -> dict:
        return {(int(v), int(u)): i for i, (v, u) in enumerate(zip(self.edge_src, self.edge_dst))}

    def edge_id(self, v: int, u: int) -> int:
        try:
            return self._edge_lookup[(int(v), int(u))]
        except KeyError:
            raise KeyError(f"no edge ({v}, {u})") from None

    def has_edge(self, v: int, u: int) -> bool:
        return (int(v), int(u)) in self._edge_lookup

    def weight(self, v: int, u: int) -> float:
        return float(self.edge_weight[self.edge_id(v, u)])

    def activation_prob(self, v: int, u: int) -> float:
        return float(self.edge_activation_prob[self.edge_id(v, u)])

    # ---- undirected view (degree, coreness, aggregation neighbourhoods) --

    @cached_property
    def undirected(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices)`` of the in-or-out neighbourhood, deduplicated and sorted."""
        a = np.concatenate([self.edge_src, self.edge_dst])
        b = np.concatenate([self.edge_dst, self.edge_src])
        key = np.unique(a * self.node_count + b)
        rows, cols = key // self.node_count, key % self.node_count
        return _frozen(_indptr(rows, self.node_count)), _frozen(cols)

    def neighbors(self, u: int) -> np.ndarray:
        ptr, idx = self.undirected
        return idx[ptr[u]:ptr[u + 1]]

    def degree(self) -> np.ndarray:
        """Undirected degree: in- and out-neighbours counted once."""
        return np.diff(self.undirected[0])

    # ---- derived graphs --------------------------------------------------

    def with_params(self, intrinsic=None, weights=None, graph_id=None) -> "Graph":
        return Graph(
            self.node_count,
            np.column_stack([self.edge_src, self.edge_dst]),
            self.edge_weight if weights is None else weights,
            self.intrinsic_prob if intrinsic is None else intrinsic,
            graph_id=self.graph_id if graph_id is None else graph_id,
        )

    def relabel(self, perm: Sequence[int], graph_id=None) -> "Graph":
        """Return the isomorphic graph where old node ``i`` becomes ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.node_count)):
            raise ParameterError("perm must be a permutation of the node ids")
        ps = np.empty(self.node_count)
        ps[perm] = self.intrinsic_prob
        edges = np.column_stack([perm[self.edge_src], perm[self.edge_dst]])
        return Graph(self.node_count, edges, self.edge_weight, ps,
                     graph_id=graph_id or f"{self.graph_id}-perm")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self.edge_src, other.edge_src)
                and np.array_equal(self.edge_dst, other.edge_dst)
                and np.array_equal(self.edge_weight, other.edge_weight)
                and np.array_equal(self.intrinsic_prob, other.intrinsic_prob))

    __hash__ = None

    def __repr__(self):
        return f"Graph(id={self.graph_id!r}, nodes={self.node_count}, edges={self.num_edges})"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _indptr(sorted_rows: np.ndarray, n: int) -> np.ndarray:
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(sorted_rows, minlength=n), out=ptr[1:])
    return ptr


def _check_unit(values: np.ndarray, what: str):
    if values.size and not (np.all(np.isfinite(values)) and values.min() >= 0.0 and values.max() <= 1.0):
        bad = values[~((values >= 0) & (values <= 1))][0]
        raise GraphValidationError(f"{what} {bad!r} outside [0, 1]")


def _symmetrize(n: int, pairs, graph_id: str) -> Graph:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    both = np.concatenate([pairs, pairs[:, ::-1]])
    return Graph(n, both, graph_id=graph_id)


# ---- generators ------------------------------------------------------------

def _grow(n: int, m: int, p: float, rng_seed: int, graph_id: str) -> Graph:
    """Preferential attachment with optional Holme-Kim triad formation.

    Starts from the complete graph on ``m + 1`` nodes.  With ``p == 0`` no triad coin
    is ever drawn, so the random stream (and output) matches plain BA.
    """
    rng = np.random.default_rng(rng_seed)
    adj: list[set] = [set() for _ in range(n)]
    pairs = []
    pool = []  # each node repeated once per incident edge end
    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            pairs.append((a, b))
            adj[a].add(b)
            adj[b].add(a)
            pool += [a, b]

    for new in range(m + 1, n):
        chosen: list[int] = []
        while len(chosen) < m:
            if chosen and p > 0 and rng.random() < p:
                options = sorted(adj[chosen[-1]].difference(chosen))
                if options:
                    chosen.append(options[int(rng.integers(len(options)))])
                    continue
            while True:
                t = pool[int(rng.integers(len(pool)))]
                if t not in chosen:
                    break
            chosen.append(t)
        for t in chosen:
            pairs.append((t, new))
            adj[t].add(new)
            adj[new].add(t)
            pool += [t, new]
    return _symmetrize(n, pairs, graph_id)


def generate_ba(n: int, m: int, rng_seed: int = 0) -> Graph:
    """Barabasi-Albert graph: every new node attaches to ``m`` degree-biased targets."""
    if not (isinstance(n, (int, np.integer)) and isinstance(m, (int, np.integer))) or not n > m >= 1:
        raise ParameterError(f"BA needs n > m >= 1, got n={n}, m={m}")
    return _grow(int(n), int(m), 0.0, rng_seed, f"ba-n{n}-m{m}-s{rng_seed}")


def generate_plc(n: int, m: int, p: float, rng_seed: int = 0) -> Graph:
    """Holme-Kim power-law cluster graph.

    After the first preferential attachment of a new node, each further attachment
    is, with probability ``p``, a triad-closing link to a random neighbour of the
    node attached just before.
    """
    if not n > m >= 1:
        raise ParameterError(f"PLC needs n > m >= 1, got n={n}, m={m}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"triad probability {p} outside [0, 1]")
    return _grow(int(n), int(m), float(p), rng_seed, f"plc-n{n}-m{m}-p{p}-s{rng_seed}")


def generate_sbm(block_sizes: Sequence[int], prob_matrix, rng_seed: int = 0) -> Graph:
    sizes = [int(s) for s in block_sizes]
    P = np.asarray(prob_matrix, dtype=np.float64)
    k = len(sizes)
    if k == 0 or min(sizes) < 1:
        raise ParameterError("block sizes must be positive and nonempty")
    if P.shape != (k, k):
        raise ParameterError(f"probability matrix shape {P.shape} does not match {k} blocks")
    if not np.array_equal(P, P.T):
        raise ParameterError("probability matrix must be symmetric")
    if P.min() < 0 or P.max() > 1:
        raise ParameterError("block probabilities must lie in [0, 1]")

    rng = np.random.default_rng(rng_seed)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    chunks = []
    for i in range(k):
        for j in range(i, k):
            if i == j:
                a, b = np.triu_indices(sizes[i], k=1)
            else:
                a, b = np.divmod(np.arange(sizes[i] * sizes[j]), sizes[j])
            u = rng.random(len(a))
            keep = u < P[i, j]
            chunks.append(np.column_stack([a[keep] + starts[i], b[keep] + starts[j]]))
    pairs = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return _symmetrize(int(starts[-1]), pairs, f"sbm-n{starts[-1]}-k{k}-s{rng_seed}")


def generate(family: str, n: int, rng_seed: int = 0, **params) -> Graph:
    """Dispatch by family name with the defaults used by the experiment harness.

    ``ba``: m=3.  ``plc``: m=3, p=0.5.  ``sbm``: ``blocks`` near-equal blocks (default 4)
    with link probabilities ``p_in``/``p_out``; when those are absent they are chosen so
    that a node expects ``degree_in`` (6) neighbours in its own block and ``degree_out``
    (1) elsewhere, which keeps the family's degree profile fixed across sizes.
    """
    family = family.lower()
    if family == "ba":
        return generate_ba(n, params.get("m", 3), rng_seed)
    if family == "plc":
        return generate_plc(n, params.get("m", 3), params.get("p", 0.5), rng_seed)
    if family == "sbm":
        if "block_sizes" in params:
            sizes = list(params["block_sizes"])
        else:
            k = params.get("blocks", 4)
            sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
        if "prob_matrix" in params:
            P = params["prob_matrix"]
        else:
            k = len(sizes)
            block = n / k
            p_in = params.get("p_in", min(1.0, params.get("degree_in", 6.0) / max(block - 1, 1)))
            p_out = params.get("p_out", min(1.0, params.get("degree_out", 1.0) / max(n - block, 1)))
            P = np.full((k, k), float(p_out))
            np.fill_diagonal(P, float(p_in))
        return generate_sbm(sizes, P, rng_seed)
    raise ParameterError(f"unknown graph family {family!r}")


# ---- activation parameters ---------------------------------------------------

DEFAULT_PS = {"dist": "uniform", "low": 0.05, "high": 0.95}


def _sample_ps(spec, rng: np.random.Generator, n: int) -> np.ndarray:
    if spec is None:
        spec = DEFAULT_PS
    if callable(spec):
        return np.asarray(spec(rng, n), dtype=np.float64)
    if isinstance(spec, (int, float)):
        return np.full(n, float(spec))
    dist = spec.get("dist", "uniform")
    if dist == "uniform":
        return rng.uniform(spec.get("low", 0.05), spec.get("high", 0.95), n)
    if dist == "constant":
        return np.full(n, float(spec["value"]))
    if dist == "beta":
        return rng.beta(spec["a"], spec["b"], n)
    raise ParameterError(f"unknown intrinsic-probability distribution {dist!r}")


def _edge_weights(rule, g: Graph, rng: np.random.Generator) -> np.ndarray:
    if rule is None or rule == "weighted_cascade":
        return 1.0 / g.in_degree()[g.edge_dst]
    if callable(rule):
        return np.asarray(rule(g, rng), dtype=np.float64)
    if isinstance(rule, (int, float)):
        return np.full(g.num_edges, float(rule))
    kind = rule.get("rule")
    if kind == "weighted_cascade":
        return 1.0 / g.in_degree()[g.edge_dst]
    if kind == "constant":
        return np.full(g.num_edges, float(rule["value"]))
    if kind == "uniform":
        return rng.uniform(rule.get("low", 0.0), rule.get("high", 1.0), g.num_edges)
    raise ParameterError(f"unknown weight rule {kind!r}")


def assign_activation_params(g: Graph, ps_sampler=None, weight_rule=None, rng_seed: int = 0) -> Graph:
    """Draw ``p_s`` per node and ``w`` per edge; activation probabilities follow from both.

    ``ps_sampler`` is a number, a dict like ``{"dist": "uniform", "low": .05, "high": .95}``
    (``constant``/``beta`` also accepted) or ``f(rng, n)``.  ``weight_rule`` is
    ``"weighted_cascade"`` (``1/in_degree(target)``, the default), a number, a dict
    ``{"rule": "constant"|"uniform", ...}`` or ``f(graph, rng)``.
    """
    rng = np.random.default_rng(rng_seed)
    ps = _sample_ps(ps_sampler, rng, g.node_count)
    w = _edge_weights(weight_rule, g, rng)
    return g.with_params(intrinsic=ps, weights=w)


# ---- coreness ------------------------------------------------------------------

def coreness(g: Graph) -> np.ndarray:
    """k-core number of every node on the undirected view (bucket peeling, O(n + m))."""
    ptr, idx = g.undirected
    n = g.node_count
    deg = np.diff(ptr).astype(np.int64)
    max_deg = int(deg.max()) if n else 0
    # bin sort nodes by degree
    bin_start = np.zeros(max_deg + 2, dtype=np.int64)
    np.cumsum(np.bincount(deg, minlength=max_deg + 1), out=bin_start[1:])
    order = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    bins = bin_start[:-1].copy()
    vert = order.copy()
    deg = deg.tolist()
    vert = vert.tolist()
    pos = pos.tolist()
    bins = bins.tolist()
    idx = idx.tolist()
    ptr = ptr.tolist()
    for i in range(n):
        v = vert[i]
        for k in range(ptr[v], ptr[v + 1]):
            u = idx[k]
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    vert[pu], vert[pw] = w, u
                    pos[u], pos[w] = pw, pu
                bins[du] += 1
                deg[u] -= 1
    return np.asarray(deg, dtype=np.int64)


# ---- file format ---------------------------------------------------------------

def save_graph(g: Graph, path) -> None:
    """Write ``nodes <n>``, then ``node <id> <p_s>`` lines, then ``edge <src> <dst> <w>`` lines."""
    lines = [f"nodes {g.node_count}"]
    lines += [f"node {i} {float(p)!r}" for i, p in enumerate(g.intrinsic_prob)]
    lines += [f"edge {int(s)} {int(d)} {float(w)!r}"
              for s, d, w in zip(g.edge_src, g.edge_dst, g.edge_weight)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path, graph_id: str | None = None) -> Graph:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if graph_id is None:
        graph_id = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_graph(text, graph_id)


def parse_graph(text: str, graph_id: str = "graph") -> Graph:
    n = None
    ps: dict[int, float] = {}
    edges, weights = [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if n is None:
                if parts[0] != "nodes" or len(parts) != 2:
                    raise GraphParseError("expected header 'nodes <n>'", line_no)
                n = int(parts[1])
                if n < 1:
                    raise GraphParseError("node count must be >= 1", line_no)
            elif parts[0] == "node" and len(parts) == 3:
                if edges:
                    raise GraphParseError("node line after edge section", line_no)
                i = int(parts[1])
                if not 0 <= i < n or i in ps:
                    raise GraphParseError(f"bad or repeated node id {i}", line_no)
                ps[i] = _unit(parts[2], "intrinsic probability", line_no)
            elif parts[0] == "edge" and len(parts) == 4:
                if len(ps) != n:
                    raise GraphParseError(f"expected {n} node lines before edges, found {len(ps)}", line_no)
                edges.append((int(parts[1]), int(parts[2])))
                weights.append(_unit(parts[3], "edge weight", line_no))
            else:
                raise GraphParseError(f"unrecognised line {line!r}", line_no)
        except ValueError as exc:
            if isinstance(exc, GraphValidationError):
                raise
            raise GraphParseError(str(exc), line_no) from None
    if n is None:
        raise GraphParseError("missing 'nodes <n>' header")
    if len(ps) != n:
        raise GraphParseError(f"expected {n} node lines, found {len(ps)}")
    intrinsic = [ps[i] for i in range(n)]
    return Graph(n, edges, weights, intrinsic, graph_id=graph_id)


def _unit(token: str, what: str, line_no: int) -> float:
    x = float(token)
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise GraphValidationError(f"line {line_no}: {what} {x!r} outside [0, 1]")
    return x
