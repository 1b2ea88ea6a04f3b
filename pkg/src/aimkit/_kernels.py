"""Numba kernels for independent-cascade trials.

Every random coin is a pure function of ``(key, trial, slot)``: edge ``e`` uses slot
``e`` and seed ``s``'s intrinsic coin uses slot ``num_edges + s``.  A trial therefore
realises one fixed live-edge world no matter which seed set is simulated on it, which
gives common random numbers across seed sets for free and makes trial order
irrelevant.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix(x):
    x = x + _GOLDEN
    x = (x ^ (x >> _S30)) * _M1
    x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


@njit(cache=True, inline="always")
def coin(key, trial, slot):
    h = _mix(key)
    h = _mix(h ^ np.uint64(trial))
    h = _mix(h ^ np.uint64(slot))
    return float(h >> _S11) * _INV53


@njit(cache=True)
def spread_trials(indptr, indices, probs, seeds, seed_probs, intrinsic, key, trial_start, n_trials):
    """Activated-node count for trials ``trial_start .. trial_start + n_trials - 1``."""
    n = indptr.shape[0] - 1
    n_edges = indices.shape[0]
    mark = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    out = np.empty(n_trials, dtype=np.int64)
    for t in range(n_trials):
        trial = trial_start + t
        stamp = t + 1
        tail = 0
        for s in seeds:
            if mark[s] == stamp:
                continue
            if intrinsic and not coin(key, trial, n_edges + s) < seed_probs[s]:
                continue
            mark[s] = stamp
            queue[tail] = s
            tail += 1
        head = 0
        while head < tail:
            v = queue[head]
            head += 1
            for e in range(indptr[v], indptr[v + 1]):
                u = indices[e]
                if mark[u] != stamp and coin(key, trial, e) < probs[e]:
                    mark[u] = stamp
                    queue[tail] = u
                    tail += 1
        out[t] = tail
    return out


@njit(cache=True)
def segment_max(indptr, indices, H):
    """Row-wise max of ``H`` over each node's neighbour list, with the first winning neighbour.

    Nodes without neighbours get zeros and winner -1.
    """
    n = indptr.shape[0] - 1
    d = H.shape[1]
    out = np.zeros((n, d))
    win = np.full((n, d), -1, dtype=np.int64)
    for u in range(n):
        lo = indptr[u]
        hi = indptr[u + 1]
        if lo == hi:
            continue
        first = indices[lo]
        for j in range(d):
            out[u, j] = H[first, j]
            win[u, j] = first
        for k in range(lo + 1, hi):
            v = indices[k]
            for j in range(d):
                if H[v, j] > out[u, j]:
                    out[u, j] = H[v, j]
                    win[u, j] = v
    return out, win


@njit(cache=True)
def scatter_winners(win, grad, out):
    """``out[win[u, j], j] += grad[u, j]`` wherever ``win[u, j] >= 0``."""
    n, d = win.shape
    for u in range(n):
        for j in range(d):
            w = win[u, j]
            if w >= 0:
                out[w, j] += grad[u, j]
