"""Kantorovich potentials for the causal cost.

Fields are extended-real functions on finite point sets. The chain
construction builds a c-convex potential from a c-cyclically monotone
support by a longest-path computation; c-transforms, c-subdifferentials,
Monge-map recovery and finite-difference regularity diagnostics act on the
resulting fields.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .geometry import CostParams, as_cloud, as_coords, legendre_inverse, lorentz_distance
from .grid import UniformGrid
from .transport import TransportError, _extract_cycle, cycle_excess, exchange_graph

SUBDIFF_TOL = 1e-7
_CHAIN_EPS = 1e-13


class NotMonotoneError(TransportError):
    """The support admits a cycle that lowers the total cost."""

    def __init__(self, cycle, excess):
        super().__init__(f"support is not c-cyclically monotone: cycle {cycle} has excess {excess:.3e}")
        self.cycle = cycle
        self.excess = excess


@dataclass(frozen=True)
class Provenance:
    """Where a field came from: ``chain``, ``c_transform``, ``explicit`` or ``lax_oleinik``."""

    kind: str
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.detail}


def _encode(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _decode(v) -> float:
    if isinstance(v, str):
        if v not in ("inf", "-inf"):
            raise ValueError(f"bad value sentinel {v!r}")
        return math.inf if v == "inf" else -math.inf
    return float(v)


@dataclass(eq=False)
class PotentialField:
    """Extended-real values on a finite point set.

    Attributes:
        points: ``(N, n+1)`` coordinates.
        values: ``(N,)`` values in ``[-inf, inf]``.
        provenance: construction record.
        grid: set when ``points`` enumerate a ``UniformGrid`` in C order.
        time: time label for evolved fields.
    """

    points: np.ndarray
    values: np.ndarray
    provenance: Provenance = Provenance("explicit")
    grid: UniformGrid | None = None
    time: float = 0.0

    def __post_init__(self):
        self.points = as_cloud(self.points)
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.shape[0] != self.points.shape[0]:
            raise ValueError("one value per point required")
        if np.isnan(self.values).any():
            raise ValueError("NaN in potential values")
        if self.grid is not None and self.grid.size != len(self.values):
            raise ValueError("grid size does not match the number of values")

    def __len__(self):
        return len(self.values)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def grid_values(self) -> np.ndarray:
        if self.grid is None:
            raise ValueError("field is not on a grid")
        return self.values.reshape(self.grid.shape)

    def shifted(self, kappa: float) -> "PotentialField":
        return PotentialField(self.points, self.values + kappa, self.provenance, self.grid, self.time)

    def to_json(self) -> dict:
        out = {
            "points": self.points.tolist(),
            "values": [_encode(v) for v in self.values],
            "provenance": self.provenance.to_json(),
            "time": self.time,
        }
        if self.grid is not None:
            out["grid"] = self.grid.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PotentialField":
        unknown = set(data) - {"points", "values", "provenance", "time", "grid"}
        if unknown:
            raise ValueError(f"unknown field keys: {sorted(unknown)}")
        prov = dict(data.get("provenance", {"kind": "explicit"}))
        kind = prov.pop("kind", "explicit")
        grid = UniformGrid.from_json(data["grid"]) if "grid" in data else None
        points = np.asarray(data["points"], dtype=float)
        if points.size == 0 and grid is not None:
            points = grid.points()
        return cls(points, [_decode(v) for v in data["values"]], Provenance(kind, prov), grid,
                   float(data.get("time", 0.0)))

    def to_csv(self) -> str:
        """Rows ``t, x_1, ..., x_n, value`` with ``inf``/``-inf`` spelled out."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        dim = self.points.shape[1] - 1
        writer.writerow(["t"] + [f"x{k + 1}" for k in range(dim)] + ["value"])
        for pt, v in zip(self.points, self.values):
            writer.writerow([repr(float(c)) for c in pt] + [repr(float(v)) if math.isfinite(v) else _encode(v)])
        return buf.getvalue()


@dataclass
class SubdifferentialSet:
    """Candidates ``y`` with their slack ``phi(x) + c(x, y) - psi(y)``."""

    x: np.ndarray
    candidates: np.ndarray
    slack: np.ndarray
    tol: float = SUBDIFF_TOL

    @property
    def members(self) -> np.ndarray:
        return self.candidates[self.slack <= self.tol]

    def __contains__(self, y) -> bool:
        y = as_coords(y)
        hit = np.all(np.isclose(self.candidates, y, rtol=0, atol=1e-12), axis=1)
        return bool(np.any(hit & (self.slack <= self.tol)))

    def slack_at(self, y) -> float:
        y = as_coords(y)
        hit = np.flatnonzero(np.all(np.isclose(self.candidates, y, rtol=0, atol=1e-12), axis=1))
        if hit.size == 0:
            raise KeyError("point is not a candidate")
        return float(self.slack[hit[0]])


# -- chain construction ------------------------------------------------------------

def chain_values(sources, targets, params: CostParams = CostParams(), anchor: int = 0) -> np.ndarray:
    """Longest chain sums ``L[j]`` from the anchor pair to each support pair.

    ``L[j]`` is the supremum of ``sum_i c(x_i, y_i) - c(x_{i+1}, y_i)`` over
    chains starting at ``x_0 = sources[anchor]`` and ending with
    ``x_{k+1} = sources[j]``; ``-inf`` when no finite chain exists.

    Raises:
        NotMonotoneError: when a positive chain cycle exists.
    """
    W = exchange_graph(sources, targets, params)
    n = W.shape[0]
    if not 0 <= anchor < n:
        raise IndexError("anchor out of range")
    np.fill_diagonal(W, np.inf)
    dist, pred, hit = kernels.bellman_ford(W, anchor, _CHAIN_EPS)
    if hit >= 0:
        _, pred_all, hit_all = kernels.bellman_ford(W, -1, _CHAIN_EPS)
        cycle = _extract_cycle(pred_all if hit_all >= 0 else pred, hit_all if hit_all >= 0 else hit, n)
        raise NotMonotoneError(cycle, cycle_excess(cycle, W) if cycle else float("nan"))
    # replay exact chain sums along the shortest-path tree
    L = np.full(n, -np.inf)
    L[anchor] = 0.0
    order = np.argsort(np.where(np.isfinite(dist), _tree_depth(pred, anchor), n + 1), kind="stable")
    for j in order:
        if j == anchor or not np.isfinite(dist[j]):
            continue
        i = int(pred[j])
        L[j] = L[i] - W[i, j]
    return L


def _tree_depth(pred, root):
    n = len(pred)
    depth = np.full(n, -1)
    depth[root] = 0
    for v in range(n):
        path = []
        u = v
        while depth[u] < 0 and pred[u] >= 0 and len(path) <= n:
            path.append(u)
            u = int(pred[u])
        base = depth[u] if depth[u] >= 0 else n
        for k, w in enumerate(reversed(path)):
            depth[w] = base + k + 1
    return depth


def rockafellar_potential(sources, targets, params: CostParams = CostParams(), anchor: int = 0,
                          query=None) -> PotentialField:
    """Chain-built c-convex potential of the support ``{(sources[k], targets[k])}``.

    ``phi(x) = max_j L[j] + c(x_j, y_j) - c(x, y_j)`` with ``L`` from
    :func:`chain_values`. Query points that coincide with a source get the
    chain value of that source, so ``phi(x_anchor) = 0`` exactly. Points
    no chain reaches get ``-inf``.
    """
    X, Y = as_cloud(sources), as_cloud(targets)
    L = chain_values(X, Y, params, anchor)
    Q = X if query is None else as_cloud(query)
    own = np.array([kernels.pair_cost(X[j:j + 1], Y[j:j + 1], params.p, 1.0, params.null_tol)[0][0, 0]
                    for j in range(len(X))])
    u = np.where(np.isfinite(L), L + own, -np.inf)
    vals, _ = kernels.sup_convolution(u, Y, Q, params.p, 1.0, params.null_tol)
    # exact values at support sources
    diff = np.abs(Q[:, None, :] - X[None, :, :]).max(axis=2)
    qi, j = np.nonzero(diff == 0)
    vals[qi] = L[j]
    return PotentialField(Q, vals, Provenance("chain", {"anchor": int(anchor)}))


def c_transform(phi: PotentialField, targets, params: CostParams = CostParams(), time: float = 1.0) -> PotentialField:
    """``phi^c(y) = inf_x phi(x) + c_time(x, y)`` over the field's points.

    Pairs with infinite cost are skipped (``-inf + inf := +inf``); the result
    is ``+inf`` where no finite pair exists.
    """
    Y = as_cloud(targets)
    vals, _ = kernels.inf_convolution(phi.values, phi.points, Y, params.p, time, params.null_tol)
    return PotentialField(Y, vals, Provenance("c_transform", {"of": phi.provenance.kind}))


def c_conjugate(psi: PotentialField, sources, params: CostParams = CostParams(), time: float = 1.0) -> PotentialField:
    """``psi^c(x) = sup_y psi(y) - c_time(x, y)`` over the field's points (``-inf`` if empty)."""
    X = as_cloud(sources)
    vals, _ = kernels.sup_convolution(psi.values, psi.points, X, params.p, time, params.null_tol)
    return PotentialField(X, vals, Provenance("c_transform", {"of": psi.provenance.kind, "side": "source"}))


def _value_at(phi, x) -> float:
    if callable(phi) and not isinstance(phi, PotentialField):
        return float(np.asarray(phi(as_coords(x)[None, :])).ravel()[0])
    if isinstance(phi, PotentialField):
        hit = np.flatnonzero(np.all(phi.points == as_coords(x), axis=1))
        if hit.size == 0:
            raise KeyError("point is not in the field's domain")
        return float(phi.values[hit[0]])
    return float(phi)


def c_subdifferential(phi, psi, x, params: CostParams = CostParams(), candidates=None,
                      tol: float = SUBDIFF_TOL) -> SubdifferentialSet:
    """Candidates ``y`` where ``phi(x) + c(x, y) - psi(y)`` is within ``tol`` of zero.

    Args:
        phi: value ``phi(x)``, a field containing ``x``, or a callable on point arrays.
        psi: the dual field (its points are the default candidates) or a callable.
        x: base point.
        candidates: optional points to test instead of ``psi.points``.
    """
    x = as_coords(x)
    phx = _value_at(phi, x)
    if not math.isfinite(phx):
        raise ValueError("c-subdifferential needs a finite value at the base point")
    if candidates is None:
        cand = psi.points
        psv = psi.values
    else:
        cand = as_cloud(candidates)
        psv = np.asarray(psi(cand), dtype=float) if callable(psi) and not isinstance(psi, PotentialField) \
            else np.array([_value_at(psi, y) for y in cand])
    c, _ = kernels.pair_cost(x[None, :], cand, params.p, 1.0, params.null_tol)
    c = c[0]
    ok = np.isfinite(psv) & np.isfinite(c)
    slack = np.where(ok, phx + c - psv, np.inf)
    return SubdifferentialSet(x, cand[ok], slack[ok], tol)


# -- explicit c-convex functions -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class AtomicCConvex:
    """``phi(x) = max_k psi_k - c(x, y_k)`` for finitely many atoms ``(y_k, psi_k)``."""

    atoms: np.ndarray
    psi: np.ndarray
    params: CostParams = CostParams()

    def __post_init__(self):
        object.__setattr__(self, "atoms", as_cloud(self.atoms))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float).ravel())

    def __call__(self, points) -> np.ndarray:
        vals, _ = self.evaluate(points)
        return vals

    def evaluate(self, points):
        """Values and maximizing atom index (``-1`` where ``-inf``)."""
        P = as_cloud(np.atleast_2d(points))
        return kernels.sup_convolution(self.psi, self.atoms, P, self.params.p, 1.0, self.params.null_tol)

    def dual(self) -> PotentialField:
        return PotentialField(self.atoms, self.psi, Provenance("explicit", {"family": "atoms"}))

    def shifted(self, kappa: float) -> "AtomicCConvex":
        return AtomicCConvex(self.atoms, self.psi + kappa, self.params)


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


@dataclass(frozen=True)
class HyperbolaCConvex:
    """``phi = psi^c`` for ``psi(y) = -s^(-p)`` on the hyperbola ``y = (t=1/s, x=s)``, ``s > 0``.

    The supremum over ``s`` is found by a logarithmic scan followed by golden
    section search in ``log s`` with bracket ``bracket``. Only 1+1 points are
    accepted.
    """

    params: CostParams = CostParams()
    bracket: float = 1e-10
    scan: int = 4001
    s_range: tuple[float, float] = (1e-8, 1e8)

    def hyperbola_point(self, s: float) -> np.ndarray:
        return np.array([1.0 / s, s])

    def psi(self, s):
        return -np.asarray(s, dtype=float) ** (-self.params.p)

    def _objective(self, x, s):
        # psi(y) + d(x, y)^p written as s^-p * ((s d)^p - 1), with (s d)^2 - 1
        # expanded so that nothing cancels when the two terms nearly agree
        s = np.asarray(s, dtype=float)
        dt = 1.0 / s - x[0]
        dx = s - x[1]
        causal = dt >= np.abs(dx)
        wm1 = -2.0 * s * x[0] + (s * x[0]) ** 2 - (s * dx) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            val = s ** (-self.params.p) * np.expm1(0.5 * self.params.p * np.log1p(np.maximum(wm1, -1.0)))
        return np.where(causal, val, -np.inf)

    def argmax(self, x) -> tuple[float, float]:
        """Best hyperbola parameter ``s`` and the value of ``psi(y) - c(x, y)`` there.

        Every local maximum of the logarithmic scan is refined; the best refined
        value wins.
        """
        x = as_coords(x)
        if x.size != 2:
            raise ValueError("the hyperbola family lives in 1+1 dimensions")
        logs = np.linspace(math.log(self.s_range[0]), math.log(self.s_range[1]), self.scan)
        vals = self._objective(x, np.exp(logs))
        if not np.any(np.isfinite(vals)):
            return math.nan, -math.inf
        padded = np.concatenate([[-np.inf], vals, [-np.inf]])
        peaks = np.flatnonzero((vals >= padded[:-2]) & (vals >= padded[2:]) & np.isfinite(vals))
        f = lambda ls: float(self._objective(x, math.exp(ls)))
        best_ls, best_v = math.nan, -math.inf
        for k in peaks:
            lo, hi = logs[max(k - 1, 0)], logs[min(k + 1, len(logs) - 1)]
            ls, v = _golden_max(f, lo, hi, self.bracket)
            if vals[k] > v:
                ls, v = logs[k], float(vals[k])
            if v > best_v:
                best_ls, best_v = ls, v
        return math.exp(best_ls), best_v

    def __call__(self, points) -> np.ndarray:
        P = as_cloud(np.atleast_2d(points))
        return np.array([self.argmax(x)[1] for x in P])


def explicit_cconvex(spec: dict, params: CostParams = CostParams()):
    """Evaluator for a c-convex function given by its dual data.

    ``spec`` is either ``{"atoms": [[y, psi], ...]}`` with ``y`` a coordinate
    list, or ``{"hyperbola": {}}`` for the hyperbola family.
    """
    if "atoms" in spec:
        atoms = [np.asarray(y, dtype=float) for y, _ in spec["atoms"]]
        return AtomicCConvex(np.array(atoms), [v for _, v in spec["atoms"]], params)
    if "hyperbola" in spec:
        return HyperbolaCConvex(params, **dict(spec["hyperbola"] or {}))
    raise ValueError(f"unknown c-convex family: {sorted(spec)}")


# -- Monge map -----------------------------------------------------------------------

def grid_gradient(field: PotentialField, index) -> np.ndarray:
    """Central-difference gradient at an interior grid node."""
    vals = field.grid_values()
    h = field.grid.step
    index = tuple(index)
    grad = np.empty(len(index))
    for axis in range(len(index)):
        if not 0 < index[axis] < vals.shape[axis] - 1:
            raise ValueError("gradient requested at a boundary node")
        up = list(index)
        dn = list(index)
        up[axis] += 1
        dn[axis] -= 1
        grad[axis] = (vals[tuple(up)] - vals[tuple(dn)]) / (2.0 * h)
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite values around the node")
    return grad


def monge_map(field: PotentialField, index, params: CostParams = CostParams()) -> np.ndarray:
    """Target ``T(x) = x + v`` with ``v`` the velocity whose Legendre image is ``grad phi(x)``.

    Since ``grad_x c(x, y) = -dL/dv(y - x)``, the equation
    ``grad phi + grad_x c(x, T x) = 0`` says that ``grad phi(x)`` is the
    Legendre image of ``T(x) - x``.

    Raises:
        NotCausalError: if the gradient leaves the interior of the dual cone.
    """
    q = grid_gradient(field, index)
    x = field.grid.points()[np.ravel_multi_index(tuple(index), field.grid.shape)]
    return x + legendre_inverse(q, params)


# -- regularity diagnostics -------------------------------------------------------

def _directions(ndim):
    dirs = [tuple(int(k == a) for k in range(ndim)) for a in range(ndim)]
    for a in range(ndim):
        for b in range(a + 1, ndim):
            for sgn in (1, -1):
                dirs.append(tuple(1 if k == a else (sgn if k == b else 0) for k in range(ndim)))
    return dirs


def second_differences(values, h: float, masked: bool = False) -> np.ndarray:
    """All axis and diagonal quotients ``(f(x+he) + f(x-he) - 2f(x)) / |he|^2``.

    With ``masked`` set, stencils touching a non-finite value are dropped;
    otherwise a non-finite value raises ``ValueError``.
    """
    f = np.asarray(values, dtype=float)
    if not masked and not np.all(np.isfinite(f)):
        raise ValueError("infinite value inside the patch")
    out = []
    for e in _directions(f.ndim):
        inner = tuple(slice(1, n - 1) for n in f.shape)
        if any(n < 3 for n in f.shape):
            continue
        plus = tuple(slice(1 + d, n - 1 + d) for d, n in zip(e, f.shape))
        minus = tuple(slice(1 - d, n - 1 - d) for d, n in zip(e, f.shape))
        with np.errstate(invalid="ignore"):
            q = (f[plus] + f[minus] - 2.0 * f[inner]) / (h * h * sum(d * d for d in e))
        out.append(q[np.isfinite(q)].ravel())
    return np.concatenate(out) if out else np.empty(0)


def semiconvexity_diagnostic(values, h: float, masked: bool = False) -> float:
    """Estimated semiconvexity constant ``max(0, -min second difference)``."""
    q = second_differences(values, h, masked)
    return float(max(0.0, -q.min())) if q.size else 0.0


def semiconcavity_diagnostic(values, h: float, masked: bool = False) -> float:
    """Estimated semiconcavity constant ``max(0, max second difference)``."""
    q = second_differences(values, h, masked)
    return float(max(0.0, q.max())) if q.size else 0.0


def lightcone_margin(phi_x: float, psi, x, delta: float, params: CostParams = CostParams(),
                     candidates=None) -> float:
    """``phi(x) - sup{psi(y) - c(x, y) : d(x, y) <= delta}`` over causal candidates.

    Returns ``+inf`` when no candidate qualifies.
    """
    if not math.isfinite(phi_x):
        raise ValueError("margin needs a finite value at the base point")
    x = as_coords(x)
    if candidates is None:
        cand, psv = psi.points, psi.values
    else:
        cand = as_cloud(candidates)
        psv = np.array([_value_at(psi, y) for y in cand])
    c, _ = kernels.pair_cost(x[None, :], cand, params.p, 1.0, params.null_tol)
    c = c[0]
    d = np.array([lorentz_distance(x, y, params.null_tol) for y in cand])
    ok = np.isfinite(c) & (d <= delta) & (psv > -np.inf)
    if not ok.any():
        return math.inf
    return float(phi_x - np.max(psv[ok] - c[ok]))


def evaluate_on_grid(fn: Callable, grid: UniformGrid, provenance: Provenance = Provenance("explicit")) -> PotentialField:
    pts = grid.points()
    return PotentialField(pts, fn(pts), provenance, grid)
