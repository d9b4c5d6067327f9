"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same numerical contract; ``lorentzot.kernels`` picks one at import.
"""
import numpy as np

# causal class codes shared with the Cython kernels
COINCIDENT = 0
TIMELIKE_FUTURE = 1
NULL_FUTURE = 2
SPACELIKE = 3
NULL_PAST = 4
TIMELIKE_PAST = 5

_CHUNK = 1 << 20


def _classify_dist(dt, dx, null_tol):
    """Return (class codes, Lorentzian distance) for displacement arrays."""
    adt = np.abs(dt)
    gap = adt - dx
    band = null_tol * (1.0 + adt)
    coincident = (adt <= null_tol) & (dx <= null_tol)
    null = (np.abs(gap) <= band) & ~coincident
    timelike = (gap > band) & ~coincident
    cls = np.full(dt.shape, SPACELIKE, dtype=np.int8)
    fut = dt > 0
    cls[timelike & fut] = TIMELIKE_FUTURE
    cls[timelike & ~fut] = TIMELIKE_PAST
    cls[null & fut] = NULL_FUTURE
    cls[null & ~fut] = NULL_PAST
    cls[coincident] = COINCIDENT
    dist = np.zeros(dt.shape)
    tf = cls == TIMELIKE_FUTURE
    dist[tf] = np.sqrt(gap[tf] * (adt[tf] + dx[tf]))
    return cls, dist


def _displacements(X, Y):
    dt = Y[None, :, 0] - X[:, None, 0]
    diff = Y[None, :, 1:] - X[:, None, 1:]
    dx = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return dt, dx


def _cost_from(cls, dist, p, t):
    causal = (cls == TIMELIKE_FUTURE) | (cls == NULL_FUTURE) | (cls == COINCIDENT)
    out = np.full(cls.shape, np.inf)
    if t > 0:
        out[causal] = -(t ** (1.0 - p)) * dist[causal] ** p
    else:
        out[cls == COINCIDENT] = 0.0
    return out


def pair_cost(X, Y, p, t, null_tol):
    """Time-``t`` action matrix ``c_t(X[i], Y[j])`` and class codes."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    dt, dx = _displacements(X, Y)
    cls, dist = _classify_dist(dt, dx, null_tol)
    return _cost_from(cls, dist, p, t), cls


def _row_blocks(n_rows, n_cols):
    step = max(1, _CHUNK // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(n_rows, start + step))


def inf_convolution(u, X, Y, p, t, null_tol):
    """``min_i u[i] + c_t(X[i], Y[j])`` with ``-inf + inf := +inf``.

    Returns the values and the index of a minimiser (-1 when the value is +inf
    because no finite combination exists).
    """
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    best = np.full(len(Y), np.inf)
    arg = np.full(len(Y), -1, dtype=np.int64)
    for blk in _row_blocks(len(Y), len(X)):
        C, _ = pair_cost(X, Y[blk], p, t, null_tol)
        with np.errstate(invalid="ignore"):
            S = u[:, None] + C
        S[np.isnan(S)] = np.inf
        j = np.argmin(S, axis=0)
        v = S[j, np.arange(S.shape[1])]
        best[blk] = v
        arg[blk] = np.where(np.isposinf(v), -1, j)
    return best, arg


def sup_convolution(u, Y, X, p, t, null_tol):
    """``max_j u[j] - c_t(X[i], Y[j])`` with ``+inf - inf := -inf``."""
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    best = np.full(len(X), -np.inf)
    arg = np.full(len(X), -1, dtype=np.int64)
    for blk in _row_blocks(len(X), len(Y)):
        C, _ = pair_cost(X[blk], Y, p, t, null_tol)
        with np.errstate(invalid="ignore"):
            S = u[None, :] - C
        S[np.isnan(S)] = -np.inf
        j = np.argmax(S, axis=1)
        v = S[np.arange(S.shape[0]), j]
        best[blk] = v
        arg[blk] = np.where(np.isneginf(v), -1, j)
    return best, arg


def bellman_ford(W, start, eps):
    """Shortest paths on a dense digraph with ``W[a, b] = +inf`` for no edge.

    ``start < 0`` seeds every node at distance 0 (a virtual source joined to
    all nodes), which turns the run into pure negative-cycle detection.
    ``eps`` is added to every finite edge weight, so only cycles of weight
    below ``-eps * length`` are reported.

    Returns ``(dist, pred, hit)`` where ``hit`` is a node whose predecessor
    chain enters a negative cycle, or -1.
    """
    W = np.asarray(W, dtype=float) + eps
    n = W.shape[0]
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    if start < 0:
        dist[:] = 0.0
    else:
        dist[start] = 0.0
    hit = -1
    cols = np.arange(n)
    for it in range(n + 1):
        cand = dist[:, None] + W
        cand[np.isnan(cand)] = np.inf
        a = np.argmin(cand, axis=0)
        best = cand[a, cols]
        improve = best < dist
        if not improve.any():
            break
        dist = np.where(improve, best, dist)
        pred = np.where(improve, a, pred)
        if it == n:
            hit = int(np.flatnonzero(improve)[0])
    return dist, pred, hit
