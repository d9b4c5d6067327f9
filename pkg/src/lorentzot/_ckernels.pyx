# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_fallback.py``.

Same signatures, same conventions; the Python module documents them.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, INFINITY

cnp.import_array()

cdef enum:
    COINCIDENT = 0
    TIMELIKE_FUTURE = 1
    NULL_FUTURE = 2
    SPACELIKE = 3
    NULL_PAST = 4
    TIMELIKE_PAST = 5


cdef inline int _classify(const double[:, ::1] X, Py_ssize_t i,
                          const double[:, ::1] Y, Py_ssize_t j,
                          double null_tol, double* dist) noexcept nogil:
    cdef Py_ssize_t k, dim = X.shape[1]
    cdef double dt = Y[j, 0] - X[i, 0]
    cdef double s = 0.0, d
    for k in range(1, dim):
        d = Y[j, k] - X[i, k]
        s += d * d
    cdef double dx = sqrt(s)
    cdef double adt = fabs(dt)
    cdef double gap = adt - dx
    cdef double band = null_tol * (1.0 + adt)
    dist[0] = 0.0
    if adt <= null_tol and dx <= null_tol:
        return COINCIDENT
    if fabs(gap) <= band:
        return NULL_FUTURE if dt > 0 else NULL_PAST
    if gap > band:
        if dt > 0:
            dist[0] = sqrt(gap * (adt + dx))
            return TIMELIKE_FUTURE
        return TIMELIKE_PAST
    return SPACELIKE


cdef inline double _cost(int cls, double dist, double p, double t) noexcept nogil:
    if t > 0:
        if cls == TIMELIKE_FUTURE:
            return -pow(t, 1.0 - p) * pow(dist, p)
        if cls == NULL_FUTURE or cls == COINCIDENT:
            return -0.0
        return INFINITY
    if cls == COINCIDENT:
        return 0.0
    return INFINITY


def pair_cost(X, Y, double p, double t, double null_tol):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], m = Yv.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cls = np.empty((n, m), dtype=np.int8)
    cdef double[:, ::1] ov = out
    cdef signed char[:, ::1] cv = cls
    cdef double dist
    cdef int c
    with nogil:
        for i in range(n):
            for j in range(m):
                c = _classify(Xv, i, Yv, j, null_tol, &dist)
                cv[i, j] = c
                ov[i, j] = _cost(c, dist, p, t)
    return out, cls


def inf_convolution(u, X, Y, double p, double t, double null_tol):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], m = Yv.shape[0], i, j
    best = np.full(m, INFINITY)
    arg = np.full(m, -1, dtype=np.int64)
    cdef double[::1] bv = best
    cdef long long[::1] av = arg
    cdef double dist, c, v
    cdef int cl
    with nogil:
        for j in range(m):
            for i in range(n):
                if uv[i] == INFINITY:
                    continue
                cl = _classify(Xv, i, Yv, j, null_tol, &dist)
                c = _cost(cl, dist, p, t)
                if c == INFINITY:
                    continue
                v = uv[i] + c
                if v < bv[j] or av[j] < 0:
                    bv[j] = v
                    av[j] = i
    return best, arg


def sup_convolution(u, Y, X, double p, double t, double null_tol):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], m = Yv.shape[0], i, j
    best = np.full(n, -INFINITY)
    arg = np.full(n, -1, dtype=np.int64)
    cdef double[::1] bv = best
    cdef long long[::1] av = arg
    cdef double dist, c, v
    cdef int cl
    with nogil:
        for i in range(n):
            for j in range(m):
                if uv[j] == -INFINITY:
                    continue
                cl = _classify(Xv, i, Yv, j, null_tol, &dist)
                c = _cost(cl, dist, p, t)
                if c == INFINITY:
                    continue
                v = uv[j] - c
                if v > bv[i] or av[i] < 0:
                    bv[i] = v
                    av[i] = j
    return best, arg


def bellman_ford(W, Py_ssize_t start, double eps):
    cdef const double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t n = Wv.shape[0], a, b, it
    dist = np.full(n, INFINITY)
    pred = np.full(n, -1, dtype=np.int64)
    cdef double[::1] dv = dist
    cdef long long[::1] pv = pred
    cdef double w, cand
    cdef bint changed
    cdef Py_ssize_t hit = -1
    if start < 0:
        dist[:] = 0.0
    else:
        dist[start] = 0.0
    with nogil:
        for it in range(n + 1):
            changed = False
            for a in range(n):
                if dv[a] == INFINITY:
                    continue
                for b in range(n):
                    w = Wv[a, b]
                    if w == INFINITY:
                        continue
                    cand = dv[a] + w + eps
                    if cand < dv[b]:
                        dv[b] = cand
                        pv[b] = a
                        changed = True
                        if it == n and hit < 0:
                            hit = b
            if not changed:
                break
    return dist, pred, hit
