"""Discrete measures and couplings, with samplers for the example densities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import NULL_TOL, as_cloud, as_coords
from . import kernels

WEIGHT_TOL = 1e-12
MARGINAL_TOL = 1e-10
MERGE_TOL = 1e-9


class MeasureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure on R^{1,n}.

    Attributes:
        points: ``(N, n+1)`` array of coordinates ``[t, x...]``.
        weights: ``(N,)`` positive weights summing to one.
    """

    points: np.ndarray
    weights: np.ndarray
    merge_tol: float = MERGE_TOL

    def __post_init__(self):
        pts = as_cloud(self.points)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise MeasureError("points and weights differ in length")
        if pts.shape[0] == 0:
            raise MeasureError("empty measure")
        if pts.shape[1] < 2:
            raise MeasureError("spatial dimension must be at least 1")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("non-finite coordinates")
        if np.any(w <= 0):
            raise MeasureError("weights must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise MeasureError(f"weights sum to {w.sum()!r}, not 1")
        if len(pts) > 1 and self.merge_tol > 0:
            if cKDTree(pts).query_pairs(self.merge_tol):
                raise MeasureError("support points closer than the merge tolerance")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1] - 1

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = as_cloud(points)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)))

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        return cls(as_coords(point)[None, :], np.ones(1))

    def to_json(self) -> dict:
        return {
            "dimension": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DiscreteMeasure":
        unknown = set(data) - {"dimension", "points", "weights"}
        if unknown:
            raise MeasureError(f"unknown keys {sorted(unknown)}")
        pts = np.asarray(data["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != int(data["dimension"]) + 1:
            raise MeasureError("points do not match the declared dimension")
        return cls(pts, np.asarray(data["weights"], dtype=float))


@dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse transport plan: ``mass[k]`` moves from ``source[rows[k]]`` to ``target[cols[k]]``."""

    source: DiscreteMeasure
    target: DiscreteMeasure
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        for name in ("rows", "cols"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
        object.__setattr__(self, "mass", np.asarray(self.mass, dtype=float).reshape(-1))
        if not (len(self.rows) == len(self.cols) == len(self.mass)):
            raise MeasureError("coupling entry arrays differ in length")

    def __len__(self):
        return len(self.mass)

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(m)) for i, j, m in zip(self.rows, self.cols, self.mass)]

    def marginal_error(self) -> float:
        """Largest deviation of row/column sums from the prescribed weights."""
        r = np.bincount(self.rows, self.mass, minlength=len(self.source))
        c = np.bincount(self.cols, self.mass, minlength=len(self.target))
        return float(max(np.abs(r - self.source.weights).max(), np.abs(c - self.target.weights).max()))

    def check(self, tol: float = MARGINAL_TOL) -> None:
        """Raise unless masses are positive and marginals match within ``tol``."""
        if np.any(self.mass <= 0):
            raise MeasureError("coupling masses must be positive")
        if np.any(self.rows >= len(self.source)) or np.any(self.cols >= len(self.target)):
            raise MeasureError("coupling index out of range")
        err = self.marginal_error()
        if err > tol:
            raise MeasureError(f"marginal constraint violated by {err:.3e}")

    def entry_classes(self, null_tol: float = NULL_TOL) -> np.ndarray:
        xs = self.source.points[self.rows]
        ys = self.target.points[self.cols]
        out = np.empty(len(self), dtype=np.int8)
        for k in range(len(self)):
            _, cls = kernels.pair_cost(xs[k : k + 1], ys[k : k + 1], 0.5, 1.0, null_tol)
            out[k] = cls[0, 0]
        return out

    def is_causal(self, null_tol: float = NULL_TOL) -> bool:
        return bool(np.isin(self.entry_classes(null_tol), kernels.CAUSAL_FUTURE_CODES).all())

    def is_strictly_timelike(self, null_tol: float = NULL_TOL) -> bool:
        return bool((self.entry_classes(null_tol) == kernels.TIMELIKE_FUTURE).all())

    @classmethod
    def product(cls, mu: DiscreteMeasure, nu: DiscreteMeasure) -> "Coupling":
        i, j = np.meshgrid(np.arange(len(mu)), np.arange(len(nu)), indexing="ij")
        m = np.outer(mu.weights, nu.weights)
        return cls(mu, nu, i.ravel(), j.ravel(), m.ravel())


def marginals(coupling: Coupling) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Row and column sums of a coupling as measures on the occupied points."""
    def _side(points, idx, n):
        w = np.bincount(idx, coupling.mass, minlength=n)
        keep = w > 0
        w = w[keep]
        if abs(w.sum() - 1.0) <= MARGINAL_TOL:
            w = w / w.sum()
        return DiscreteMeasure(points[keep], w)

    return (
        _side(coupling.source.points, coupling.rows, len(coupling.source)),
        _side(coupling.target.points, coupling.cols, len(coupling.target)),
    )


def merge_points(points: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Collapse points within ``tol`` of each other, adding their weights."""
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    parent = np.arange(len(points))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    if len(points) > 1 and tol > 0:
        for a, b in cKDTree(points).query_pairs(tol):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(len(points))])
    uniq, inverse = np.unique(roots, return_inverse=True)
    merged_w = np.bincount(inverse, weights)
    return points[uniq], merged_w, inverse


def pushforward(measure: DiscreteMeasure, fn: Callable[[np.ndarray], Sequence[float]],
                merge_tol: float = MERGE_TOL) -> DiscreteMeasure:
    """Image measure ``fn_# measure``; coincident images are merged."""
    images = np.array([as_coords(fn(pt)) for pt in measure.points])
    pts, w, _ = merge_points(images, measure.weights, merge_tol)
    w = w / w.sum()
    return DiscreteMeasure(pts, w, merge_tol)


# -- densities -----------------------------------------------------------------

def _smoothstep(z):
    z = np.clip(z, 0.0, 1.0)
    return z * z * z * (z * (6.0 * z - 15.0) + 10.0)


@dataclass(frozen=True)
class _Profile:
    """Smooth 1D density on ``[lo, hi]`` that ramps to zero over ``ramp``."""

    lo: float
    hi: float
    ramp: float
    _n: int = 20001

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        r = self.ramp
        if r <= 0:
            return ((u > self.lo) & (u < self.hi)).astype(float)
        return _smoothstep((u - self.lo) / r) * _smoothstep((self.hi - u) / r)

    def _table(self):
        u = np.linspace(self.lo, self.hi, self._n)
        f = self.pdf(u)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(u))])
        return u, cdf / cdf[-1], cdf[-1]

    @property
    def mass(self) -> float:
        return self._table()[2]

    def quantile(self, q):
        u, cdf, _ = self._table()
        return np.interp(q, cdf, u)

    def cdf(self, v):
        u, cdf, _ = self._table()
        return np.interp(v, u, cdf)


class ScenarioDensity:
    """Base class of the sampleable example densities."""

    kind = "abstract"

    def sample(self, n: int, seed: int | None = 0, mode: str = "grid") -> DiscreteMeasure:
        raise NotImplementedError


@dataclass(frozen=True)
class DiracMixture(ScenarioDensity):
    atoms: tuple
    weights: tuple
    kind = "dirac"

    def sample(self, n=None, seed=None, mode="grid"):
        return DiscreteMeasure(as_cloud(self.atoms), np.asarray(self.weights, dtype=float))


@dataclass(frozen=True)
class Segment(ScenarioDensity):
    """Uniform (normalised one-dimensional Hausdorff) measure on a segment."""

    start: tuple
    end: tuple
    kind = "segment"

    def sample(self, n, seed=0, mode="grid"):
        a, b = as_coords(self.start), as_coords(self.end)
        if mode == "grid":
            s = (np.arange(n) + 0.5) / n
        else:
            s = np.sort(np.random.default_rng(seed).random(n))
        return DiscreteMeasure.uniform(a[None, :] + s[:, None] * (b - a)[None, :])


@dataclass(frozen=True)
class Ball(ScenarioDensity):
    """Uniform density on a Euclidean ball in coordinate space."""

    center: tuple
    radius: float
    kind = "ball"

    def sample(self, n, seed=0, mode="grid"):
        c = as_coords(self.center)
        d = c.size
        if mode == "grid" and d == 2:
            k = np.arange(n) + 0.5
            r = self.radius * np.sqrt(k / n)
            th = k * math.pi * (3.0 - math.sqrt(5.0))
            pts = c + np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        else:
            rng = np.random.default_rng(seed)
            g = rng.standard_normal((n, d))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            pts = c + self.radius * g * rng.random((n, 1)) ** (1.0 / d)
        return DiscreteMeasure.uniform(pts)


@dataclass(frozen=True)
class RoundedRectangle(ScenarioDensity):
    """Rotated rectangle density in 1+1 dimensions with a heavy right end.

    Corners are given in (space, time) order. The rectangle hangs below its
    upper edge ``upper_left -> upper_right`` with the given thickness. The
    density is a mixture: a smooth product profile over the whole rectangle
    (ramping to zero within ``corner`` of every edge, which rounds the corners)
    and a second product bump on the sub-rectangle ``R'`` of length
    ``right_width`` at the upper-right end, carrying ``right_mass`` of the
    total. The bump is concentrated in the top ``right_depth`` of ``R'``.
    """

    upper_left: tuple = (-0.05, 0.05)
    upper_right: tuple = (3.0, -3.0)
    thickness: float = 1.0
    corner: float = 0.1
    right_width: float = 0.5
    right_depth: float = 0.1
    right_mass: float = 0.6
    kind = "rounded_rectangle"

    @property
    def frame(self):
        ul = np.asarray(self.upper_left, dtype=float)
        ur = np.asarray(self.upper_right, dtype=float)
        length = float(np.linalg.norm(ur - ul))
        e = (ur - ul) / length
        normal = np.array([-e[1], e[0]])
        if normal[1] > 0:
            normal = -normal
        return ul, e, normal, length

    def _profiles(self):
        _, _, _, length = self.frame
        r = min(self.corner, length / 4, self.thickness / 4)
        base = (_Profile(0.0, length, r), _Profile(0.0, self.thickness, r))
        a, b = self.right_width, min(self.right_depth, self.thickness)
        rb = min(r, a / 4, b / 4)
        bump = (_Profile(length - a, length, rb), _Profile(0.0, b, rb))
        return base, bump

    def to_spacetime(self, u, w) -> np.ndarray:
        """Map edge coordinates (along, depth) to ``[t, x]`` points."""
        ul, e, normal, _ = self.frame
        sx = ul[0] + np.asarray(u) * e[0] + np.asarray(w) * normal[0]
        st = ul[1] + np.asarray(u) * e[1] + np.asarray(w) * normal[1]
        return np.stack([st, sx], axis=-1)

    def to_frame(self, points) -> tuple[np.ndarray, np.ndarray]:
        ul, e, normal, _ = self.frame
        pts = as_cloud(points)
        rel = np.stack([pts[:, 1] - ul[0], pts[:, 0] - ul[1]], axis=1)
        return rel @ e, rel @ normal

    def pdf_frame(self, u, w):
        (bu, bw), (ku, kw) = self._profiles()
        base = bu.pdf(u) * bw.pdf(w) / (bu.mass * bw.mass)
        bump = ku.pdf(u) * kw.pdf(w) / (ku.mass * kw.mass)
        return (1.0 - self.right_mass) * base + self.right_mass * bump

    def right_region_mass(self) -> float:
        """Mass of R' (the full-thickness end block of length ``right_width``)."""
        (bu, bw), (ku, kw) = self._profiles()
        _, _, _, length = self.frame
        a = self.right_width
        base = 1.0 - bu.cdf(length - a)
        bump = 1.0 - ku.cdf(length - a)
        return float((1.0 - self.right_mass) * base + self.right_mass * bump)

    def in_right_region(self, points) -> np.ndarray:
        u, w = self.to_frame(points)
        _, _, _, length = self.frame
        return (u >= length - self.right_width) & (w >= 0) & (w <= self.thickness)

    @staticmethod
    def _grid_shape(n, aspect):
        target = max(1, int(round(math.sqrt(n / aspect))))
        divisors = [d for d in range(1, n + 1) if n % d == 0]
        nw = min(divisors, key=lambda d: (abs(d - target), d))
        return n // nw, nw

    def sample(self, n, seed=0, mode="grid"):
        (bu, bw), (ku, kw) = self._profiles()
        n_bump = int(round(self.right_mass * n))
        n_base = n - n_bump
        chunks = []
        for (pu, pw), m in (((bu, bw), n_base), ((ku, kw), n_bump)):
            if m == 0:
                continue
            if mode == "grid":
                nu_, nw_ = self._grid_shape(m, (pu.hi - pu.lo) / (pw.hi - pw.lo))
                qu = pu.quantile((np.arange(nu_) + 0.5) / nu_)
                qw = pw.quantile((np.arange(nw_) + 0.5) / nw_)
                U, W = np.meshgrid(qu, qw, indexing="ij")
                u, w = U.ravel(), W.ravel()
            else:
                rng = np.random.default_rng(None if seed is None else seed + len(chunks))
                u = pu.quantile(rng.random(m))
                w = pw.quantile(rng.random(m))
            chunks.append(self.to_spacetime(u, w))
        return DiscreteMeasure.uniform(np.concatenate(chunks))


def sample(density: ScenarioDensity, n: int = 1, seed: int | None = 0, mode: str = "grid") -> DiscreteMeasure:
    """Draw an equal-weight point cloud (or the exact atoms of a Dirac mixture)."""
    if not isinstance(density, ScenarioDensity):
        raise MeasureError(f"unknown density kind {type(density).__name__}")
    if n is not None and n < 1:
        raise MeasureError("need at least one sample")
    if mode not in ("grid", "random"):
        raise MeasureError(f"unknown sampling mode {mode!r}")
    return density.sample(n, seed=seed, mode=mode)


def figure4_map(point) -> np.ndarray:
    """Three-branch map of the causal-compactness counterexample.

    Acts on points ``(t=0, x)``: ``x <= -1 -> (x-1, 1)``,
    ``-1 <= x < 0 -> (x + 1/x, -1/x)``, ``x >= 0 -> (x, 1)`` in (space, time).
    """
    c = as_coords(point)
    x = c[1]
    if x <= -1:
        s, t = x - 1.0, 1.0
    elif x < 0:
        s, t = x + 1.0 / x, -1.0 / x
    else:
        s, t = x, 1.0
    return np.array([t, s])
