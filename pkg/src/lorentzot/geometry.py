"""Flat Minkowski spacetime R^{1,n}.

Points are stored as coordinate arrays ``[t, x_1, ..., x_n]`` with metric
signature (-, +, ..., +). Everything here is closed form: straight geodesics,
``d(x, y) = sqrt(dt^2 - |dx|^2)`` on causal pairs, and the Lagrangian
``L(v) = -|v|_g^p`` with its Legendre transform.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels

NULL_TOL = 1e-12
DEFAULT_P = 0.5


class CausalClass(enum.IntEnum):
    """Position of ``y`` relative to ``x``."""

    COINCIDENT = kernels.COINCIDENT
    TIMELIKE_FUTURE = kernels.TIMELIKE_FUTURE
    NULL_FUTURE = kernels.NULL_FUTURE
    SPACELIKE = kernels.SPACELIKE
    NULL_PAST = kernels.NULL_PAST
    TIMELIKE_PAST = kernels.TIMELIKE_PAST

    @property
    def is_causal_future(self) -> bool:
        return self in (CausalClass.COINCIDENT, CausalClass.TIMELIKE_FUTURE, CausalClass.NULL_FUTURE)

    def reversed(self) -> "CausalClass":
        return _REVERSE[self]


_REVERSE = {
    CausalClass.COINCIDENT: CausalClass.COINCIDENT,
    CausalClass.TIMELIKE_FUTURE: CausalClass.TIMELIKE_PAST,
    CausalClass.TIMELIKE_PAST: CausalClass.TIMELIKE_FUTURE,
    CausalClass.NULL_FUTURE: CausalClass.NULL_PAST,
    CausalClass.NULL_PAST: CausalClass.NULL_FUTURE,
    CausalClass.SPACELIKE: CausalClass.SPACELIKE,
}


class NotCausalError(ValueError):
    """A pair or vector lies outside the causal set an operation requires."""


@dataclass(frozen=True)
class CostParams:
    """Exponent of the cost ``c = -d^p``; must satisfy ``0 < p < 1``."""

    p: float = DEFAULT_P
    null_tol: float = NULL_TOL

    def __post_init__(self):
        if not (0.0 < self.p < 1.0) or math.isnan(self.p):
            raise ValueError(f"exponent p must lie in (0, 1), got {self.p}")
        if self.null_tol < 0:
            raise ValueError("null_tol must be non-negative")


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not x:
            raise ValueError("spatial dimension must be at least 1")
        if not all(math.isfinite(v) for v in (self.t, *x)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def coords(self) -> np.ndarray:
        return np.array((self.t, *self.x))

    @classmethod
    def from_coords(cls, coords: Sequence[float]) -> "SpacetimePoint":
        c = np.asarray(coords, dtype=float)
        return cls(c[0], tuple(c[1:]))

    @classmethod
    def from_space_time(cls, *coords: float) -> "SpacetimePoint":
        """Build from ``(x_1, ..., x_n, t)``, the plotting order used in 1+1 figures."""
        return cls(coords[-1], tuple(coords[:-1]))


def as_coords(point) -> np.ndarray:
    """Coordinate array of a point (``SpacetimePoint`` or array-like)."""
    if isinstance(point, SpacetimePoint):
        return point.coords
    arr = np.asarray(point, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"expected a coordinate vector [t, x...], got shape {arr.shape}")
    return arr


def as_cloud(points) -> np.ndarray:
    """Stack points into an ``(N, n+1)`` float array."""
    if isinstance(points, np.ndarray) and points.ndim == 2:
        return np.ascontiguousarray(points, dtype=float)
    arr = np.array([as_coords(p) for p in points], dtype=float)
    if arr.ndim != 2:
        raise ValueError("points must share one dimension")
    return arr


def _pair(x, y):
    a, b = as_coords(x), as_coords(y)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size - 1} vs {b.size - 1}")
    return a, b


def _class_and_dist(x, y, null_tol):
    a, b = _pair(x, y)
    cls, dist = kernels._fallback._classify_dist(
        np.array([b[0] - a[0]]), np.array([np.linalg.norm(b[1:] - a[1:])]), null_tol
    )
    return CausalClass(int(cls[0])), float(dist[0])


def classify(x, y, null_tol: float = NULL_TOL) -> CausalClass:
    """Causal class of ``y`` relative to ``x``.

    Pairs with ``|dt - |dx|| <= null_tol * (1 + |dt|)`` count as null.

    >>> classify([0, 0], [2, 1])
    <CausalClass.TIMELIKE_FUTURE: 1>
    """
    return _class_and_dist(x, y, null_tol)[0]


def lorentz_distance(x, y, null_tol: float = NULL_TOL) -> float:
    """Time separation ``d(x, y)``; zero unless ``y`` is timelike-future to ``x``."""
    return _class_and_dist(x, y, null_tol)[1]


def cost_t(t: float, x, y, params: CostParams = CostParams()) -> float:
    """Minimal time-``t`` action: ``-t^(1-p) d^p`` on J+, ``+inf`` otherwise.

    At ``t = 0`` it is 0 on the diagonal and ``+inf`` off it.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    cls, dist = _class_and_dist(x, y, params.null_tol)
    if t == 0:
        return 0.0 if cls == CausalClass.COINCIDENT else math.inf
    if not cls.is_causal_future:
        return math.inf
    return -(t ** (1.0 - params.p)) * dist ** params.p


def cost(x, y, params: CostParams = CostParams()) -> float:
    """The causal cost ``c(x, y) = -d(x, y)^p`` on J+, ``+inf`` elsewhere."""
    return cost_t(1.0, x, y, params)


def geodesic_point(x, y, s: float, null_tol: float = NULL_TOL) -> np.ndarray:
    """Point at parameter ``s`` on the straight causal geodesic from x to y."""
    a, b = _pair(x, y)
    if not classify(a, b, null_tol).is_causal_future:
        raise NotCausalError("geodesic requested between non-causal points")
    return a + s * (b - a)


# -- extended-real arithmetic -------------------------------------------------

def inf_add(a, b):
    """Sum for infimum contexts: ``-inf + inf := +inf``."""
    with np.errstate(invalid="ignore"):
        out = np.add(a, b)
    return np.where(np.isnan(out), np.inf, out) if np.ndim(out) else (math.inf if math.isnan(out) else float(out))


def sup_add(a, b):
    """Sum for supremum contexts: ``+inf - inf := -inf``."""
    with np.errstate(invalid="ignore"):
        out = np.add(a, b)
    return np.where(np.isnan(out), -np.inf, out) if np.ndim(out) else (-math.inf if math.isnan(out) else float(out))


# -- tangent and cotangent vectors -------------------------------------------

def _split(v):
    v = np.asarray(v, dtype=float)
    return v[..., 0], np.linalg.norm(v[..., 1:], axis=-1)


def is_causal_vector(v) -> bool:
    dt, dx = _split(v)
    return bool(dt >= dx and dt >= 0)


def is_timelike_vector(v) -> bool:
    dt, dx = _split(v)
    return bool(dt > dx)


def in_dual_cone_interior(q) -> bool:
    """``q`` lies in int(C*), i.e. ``-q_t > |q_x|``."""
    qt, qx = _split(q)
    return bool(-qt > qx)


def minkowski_norm(v) -> float:
    """``|v|_g = sqrt(dt^2 - |dx|^2)`` for causal ``v``; factored to avoid cancellation."""
    dt, dx = _split(v)
    return float(math.sqrt(max((dt - dx) * (dt + dx), 0.0)))


def _dual_norm(q) -> float:
    qt, qx = _split(q)
    return float(math.sqrt((-qt - qx) * (-qt + qx)))


def lagrangian(v, params: CostParams = CostParams()) -> float:
    """``L(v) = -|v|_g^p`` on causal vectors, ``+inf`` elsewhere."""
    if not is_causal_vector(v):
        return math.inf
    return -minkowski_norm(v) ** params.p


def flat(v) -> np.ndarray:
    """Lower the index with eta = diag(-1, 1, ..., 1)."""
    out = np.array(v, dtype=float)
    out[..., 0] *= -1
    return out


sharp = flat


def legendre(v, params: CostParams = CostParams()) -> np.ndarray:
    """Fibre derivative ``p |v|_g^(p-2) v_flat`` of the Lagrangian.

    Defined on strictly timelike ``v``; the image lies in int(C*).
    """
    if not is_timelike_vector(v):
        raise NotCausalError("Legendre transform needs a strictly timelike vector")
    norm = minkowski_norm(v)
    return params.p * norm ** (params.p - 2.0) * flat(v)


def legendre_inverse(q, params: CostParams = CostParams()) -> np.ndarray:
    """Unique strictly timelike ``v`` with ``legendre(v) == q``."""
    if not in_dual_cone_interior(q):
        raise NotCausalError("covector outside the interior of the dual cone")
    p = params.p
    vnorm = (_dual_norm(q) / p) ** (1.0 / (p - 1.0))
    return sharp(q) / (p * vnorm ** (p - 2.0))


def hamiltonian(q, params: CostParams = CostParams()) -> float:
    """``H(q) = (1 - p) |v|_g^p`` with ``v = legendre_inverse(q)``."""
    if not in_dual_cone_interior(q):
        raise NotCausalError("covector outside the interior of the dual cone")
    p = params.p
    return (1.0 - p) * (_dual_norm(q) / p) ** (p / (p - 1.0))
