"""Lax-Oleinik semigroups, calibrated pairs and displacement interpolation.

Forward and backward semigroups act exactly on finite carriers. The
regularized field ``T^_tau T_{s+tau} phi`` of a potential carried by finitely
many sources is evaluated in the continuum: the supremum over the
intermediate point is located by an active-set Newton solve on the KKT
system of the max-min problem.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import CostParams, NotCausalError, as_cloud, sup_add
from .measures import Coupling, DiscreteMeasure, merge_points
from .potentials import PotentialField, Provenance

ValueField = PotentialField
"""Fields evolved by the semigroups are ordinary potential fields with a time label."""

CALIBRATION_TOL = 1e-8


def lax_forward(u: PotentialField, t: float, targets, params: CostParams = CostParams()) -> PotentialField:
    """``T_t u(y) = inf_x u(x) + c_t(x, y)`` over the carrier of ``u``.

    Infinite costs are skipped (``-inf + inf := +inf``).
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    Y = as_cloud(targets)
    vals, _ = kernels.inf_convolution(u.values, u.points, Y, params.p, t, params.null_tol)
    return PotentialField(Y, vals, Provenance("lax_oleinik", {"direction": "forward", "t": t}),
                          time=u.time + t)


def minimizing_sources(u: PotentialField, t: float, targets, params: CostParams = CostParams()) -> np.ndarray:
    """Index into the carrier of ``u`` attaining ``T_t u`` at each target (``-1`` if none)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    _, arg = kernels.inf_convolution(u.values, u.points, as_cloud(targets), params.p, t, params.null_tol)
    return np.asarray(arg)


def lax_backward(u: PotentialField, s: float, sources, params: CostParams = CostParams()) -> PotentialField:
    """``T^_s u(x) = sup_y u(y) - c_s(x, y)`` over the carrier of ``u``.

    Infinite costs are skipped (``+inf - inf := -inf``).
    """
    if s < 0:
        raise ValueError("time must be non-negative")
    X = as_cloud(sources)
    vals, _ = kernels.sup_convolution(u.values, u.points, X, params.p, s, params.null_tol)
    return PotentialField(X, vals, Provenance("lax_oleinik", {"direction": "backward", "t": s}),
                          time=u.time - s)


# -- couplings along geodesics ------------------------------------------------------

@dataclass(eq=False)
class DynamicalCoupling:
    """A causal coupling with each entry carried along its affine geodesic."""

    coupling: Coupling
    params: CostParams = CostParams()

    def __post_init__(self):
        if not self.coupling.is_causal(self.params.null_tol):
            raise NotCausalError("dynamical couplings need every entry in J+")

    @property
    def starts(self) -> np.ndarray:
        return self.coupling.source.points[self.coupling.rows]

    @property
    def ends(self) -> np.ndarray:
        return self.coupling.target.points[self.coupling.cols]

    @property
    def mass(self) -> np.ndarray:
        return self.coupling.mass

    def at(self, s: float) -> np.ndarray:
        """Positions ``gamma_k(s)`` of every entry."""
        return self.starts + s * (self.ends - self.starts)


def _measure_from(points, mass, merge_tol=1e-12):
    pts, w, inverse = merge_points(points, mass, merge_tol)
    return DiscreteMeasure(pts, w / w.sum()), inverse


def displacement_interpolate(dyn: DynamicalCoupling, s: float, t: float):
    """Evaluation pushforwards ``mu_s``, ``mu_t`` and the induced coupling ``pi_{s,t}``."""
    if not 0.0 <= s < t <= 1.0:
        raise ValueError("need 0 <= s < t <= 1")
    if s == 0.0 and t == 1.0:
        return dyn.coupling.source, dyn.coupling.target, dyn.coupling
    mu_s, rows = _measure_from(dyn.at(s), dyn.mass)
    mu_t, cols = _measure_from(dyn.at(t), dyn.mass)
    key = rows * len(mu_t) + cols
    uniq, inv = np.unique(key, return_inverse=True)
    mass = np.bincount(inv, dyn.mass)
    pi = Coupling(mu_s, mu_t, uniq // len(mu_t), uniq % len(mu_t), mass)
    pi.check()
    return mu_s, mu_t, pi


def coupling_cost(coupling: Coupling, params: CostParams = CostParams(), time: float = 1.0) -> float:
    """``sum mass * c_time(x, y)`` over the entries."""
    X = coupling.source.points[coupling.rows]
    Y = coupling.target.points[coupling.cols]
    c = np.array([kernels.pair_cost(X[k:k + 1], Y[k:k + 1], params.p, time, params.null_tol)[0][0, 0]
                  for k in range(len(X))])
    return float(np.sum(coupling.mass * c))


# -- calibration ------------------------------------------------------------------------

@dataclass
class CalibrationReport:
    subsolution_violation: float
    calibration_residual: float
    worst_pair: tuple[int, int] | None
    worst_entry: int | None

    def ok(self, tol: float = CALIBRATION_TOL) -> bool:
        return self.subsolution_violation <= tol and self.calibration_residual <= tol

    def to_json(self) -> dict:
        return {
            "subsolution_violation": self.subsolution_violation,
            "calibration_residual": self.calibration_residual,
            "worst_pair": self.worst_pair,
            "worst_entry": self.worst_entry,
        }


def _lookup(field: PotentialField, points) -> np.ndarray:
    index = {row.tobytes(): k for k, row in enumerate(field.points)}
    out = np.empty(len(points))
    for k, row in enumerate(np.ascontiguousarray(points, dtype=float)):
        hit = index.get(row.tobytes())
        if hit is None:
            raise KeyError(f"point {row} is not in the field's carrier")
        out[k] = field.values[hit]
    return out


def calibration_check(phi: PotentialField, psi: PotentialField, coupling: Coupling,
                      params: CostParams = CostParams(), time: float = 1.0) -> CalibrationReport:
    """Subsolution violation over all carrier pairs and calibration residual on ``coupling``.

    The subsolution test is ``psi(y) - phi(x) <= c_time(x, y)``, read with
    ``+inf - inf := -inf``; pairs with infinite cost impose nothing.
    """
    C, _ = kernels.pair_cost(phi.points, psi.points, params.p, time, params.null_tol)
    with np.errstate(invalid="ignore"):
        diff = sup_add(psi.values[None, :], -phi.values[:, None])
        excess = np.where(np.isfinite(C), diff - C, -np.inf)
    excess = np.where(np.isnan(excess), -np.inf, excess)
    worst = np.unravel_index(int(np.argmax(excess)), excess.shape)
    violation = float(max(0.0, excess[worst]))

    xs = coupling.source.points[coupling.rows]
    ys = coupling.target.points[coupling.cols]
    phx = _lookup(phi, xs)
    psy = _lookup(psi, ys)
    ce = np.array([kernels.pair_cost(xs[k:k + 1], ys[k:k + 1], params.p, time, params.null_tol)[0][0, 0]
                   for k in range(len(xs))])
    with np.errstate(invalid="ignore"):
        resid = np.abs(psy - phx - ce)
    resid = np.where(np.isnan(resid), np.inf, resid)
    k = int(np.argmax(resid)) if len(resid) else None
    return CalibrationReport(
        violation,
        float(resid.max()) if len(resid) else 0.0,
        (int(worst[0]), int(worst[1])) if violation > 0 else None,
        k,
    )


def geodesic_calibration_residual(u: PotentialField, dyn: DynamicalCoupling, times,
                                  params: CostParams = CostParams()) -> float:
    """Worst defect of ``T_t u(gamma(t)) = T_s u(gamma(s)) + c_{t-s}(gamma(s), gamma(t))``.

    ``u`` is a potential on the sources of ``dyn`` whose c-transform is
    calibrated on the coupling; ``times`` is an increasing sequence in ``[0, 1]``.
    """
    times = sorted(float(t) for t in times)
    fields = [lax_forward(u, t, dyn.at(t), params).values if t > 0 else _lookup(u, dyn.starts) for t in times]
    worst = 0.0
    for (s, fs), (t, ft) in itertools.combinations(zip(times, fields), 2):
        gs, gt = dyn.at(s), dyn.at(t)
        for k in range(len(gs)):
            c = kernels.pair_cost(gs[k:k + 1], gt[k:k + 1], params.p, t - s, params.null_tol)[0][0, 0]
            worst = max(worst, abs(ft[k] - fs[k] - c))
    return worst


# -- regularization ---------------------------------------------------------------------

def _dpow(points, w, p):
    """``D = Q^(p/2)`` with ``Q = v_t^2 - |v_x|^2``, ``v = points - w``; gradient and Hessian.

    ``points`` has shape (P, D); ``w`` broadcasts against it. Entries with
    ``Q <= 0`` or ``v_t <= 0`` come back with ``ok = False``.
    """
    v = points - w
    gv = v.copy()
    gv[..., 1:] *= -1.0
    Q = np.einsum("...i,...i->...", v, gv)
    ok = (Q > 0) & (v[..., 0] > 0)
    Qs = np.where(ok, Q, 1.0)
    D = Qs ** (p / 2.0)
    grad = (p * Qs ** (p / 2.0 - 1.0))[..., None] * gv
    G = np.eye(v.shape[-1])
    G[1:, 1:] *= -1.0
    hess = (p * Qs ** (p / 2.0 - 1.0))[..., None, None] * (
        (p - 2.0) * gv[..., :, None] * gv[..., None, :] / Qs[..., None, None] + G
    )
    return D, grad, hess, ok


@dataclass
class _Problem:
    x: np.ndarray        # (P, D) query points
    src: np.ndarray      # (P, k, D) active sources
    val: np.ndarray      # (P, k) their potential values
    a: float             # (s + tau)^(1-p)
    b: float             # tau^(1-p)
    p: float


def _kkt_residual(prob, z, lam, r):
    Dx, gx, hx, okx = _dpow(z, prob.x, prob.p)
    Ds, gs, hs, oks = _dpow(z[:, None, :], prob.src, prob.p)
    f = prob.val - prob.a * Ds
    gf = -prob.a * gs
    hf = -prob.a * hs
    F = np.concatenate([
        prob.b * gx + np.einsum("pk,pkd->pd", lam, gf),
        f - r[:, None],
        (lam.sum(axis=1) - 1.0)[:, None],
    ], axis=1)
    ok = okx & oks.all(axis=1)
    return F, (hx, gf, hf), ok


def _kkt_solve(prob, z0, lam0=None, iters=60):
    P, k, D = prob.src.shape
    z = z0.copy()
    lam = np.full((P, k), 1.0 / k) if lam0 is None else lam0.copy()
    f0 = prob.val - prob.a * _dpow(z[:, None, :], prob.src, prob.p)[0]
    r = f0.mean(axis=1)
    F, parts, ok = _kkt_residual(prob, z, lam, r)
    norm = np.where(ok, np.linalg.norm(F, axis=1), np.inf)
    n = D + k + 1
    for _ in range(iters):
        active = np.isfinite(norm) & (norm > 1e-14)
        if not active.any():
            break
        hx, gf, hf = parts
        J = np.zeros((P, n, n))
        J[:, :D, :D] = prob.b * hx + np.einsum("pk,pkij->pij", lam, hf)
        J[:, :D, D:D + k] = np.swapaxes(gf, 1, 2)
        J[:, D:D + k, :D] = gf
        J[:, D:D + k, n - 1] = -1.0
        J[:, n - 1, D:D + k] = 1.0
        J[~active] = np.eye(n)
        rhs = np.where(active[:, None], F, 0.0)
        try:
            step = np.linalg.solve(J, -rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.zeros_like(rhs)
            for q in np.flatnonzero(active):
                try:
                    step[q] = np.linalg.solve(J[q], -rhs[q])
                except np.linalg.LinAlgError:
                    norm[q] = np.inf
        alpha = np.ones(P)
        pending = active.copy()
        for _ in range(30):
            zt = z + alpha[:, None] * step[:, :D]
            lt = lam + alpha[:, None] * step[:, D:D + k]
            rt = r + alpha * step[:, n - 1]
            Ft, pt, okt = _kkt_residual(prob, zt, lt, rt)
            nt = np.where(okt, np.linalg.norm(Ft, axis=1), np.inf)
            accept = pending & (nt < norm)
            if accept.any():
                z[accept], lam[accept], r[accept] = zt[accept], lt[accept], rt[accept]
                F[accept] = Ft[accept]
                norm[accept] = nt[accept]
                parts = tuple(np.where(_bcast(accept, a), a, b) for a, b in zip(pt, parts))
            pending &= ~accept
            if not pending.any():
                break
            alpha = np.where(pending, alpha / 2.0, alpha)
        norm[pending & (norm >= 1e-10)] = np.inf
    return z, lam, norm


def _bcast(mask, arr):
    return mask.reshape(mask.shape + (1,) * (arr.ndim - 1))


def _max_min_objective(zs, phi, X, x, s_tau, tau, params):
    """``min_i phi_i + c_{s+tau}(x_i, z) - c_tau(x, z)`` for candidate points ``z`` (one per query)."""
    vals, _ = kernels.inf_convolution(phi, X, zs, params.p, s_tau, params.null_tol)
    own = np.array([kernels.pair_cost(x[q:q + 1], zs[q:q + 1], params.p, tau, params.null_tol)[0][0, 0]
                    for q in range(len(zs))])
    with np.errstate(invalid="ignore"):
        out = vals - own
    return np.where(np.isfinite(out), out, -np.inf)


@dataclass
class RegularizedField:
    """Values of ``T^_tau T_{s+tau} phi`` together with diagnostics.

    Attributes:
        field: the regularized values on the query points.
        unregularized: ``T_s phi`` on the same points.
        argmax: maximizing intermediate point for each query.
        active: size of the active set at the optimum.
    """

    field: PotentialField
    unregularized: PotentialField
    argmax: np.ndarray
    active: np.ndarray


def _source_values(z, vals, S, time, params):
    """``vals_j + c_time(S_j, z_q)`` as a (Q, n) matrix."""
    return (vals[:, None] + kernels.pair_cost(S, z, params.p, time, params.null_tol)[0]).T


def _active_set_search(Xq, S, vals, first, s, tau, params, max_rounds=16):
    """Ascend ``min_i f_i(z) - c_tau(x, z)`` from the single-source optimum of ``first``.

    Each round solves the KKT system of the current active set, drops a
    source with a negative multiplier or adds the source that undercuts the
    active value, and stops when neither happens.
    """
    P, D = Xq.shape
    cap = D + 1
    p = params.p
    a, b = (s + tau) ** (1.0 - p), tau ** (1.0 - p)
    active = np.full((P, cap), -1, dtype=np.int64)
    active[:, 0] = first
    size = np.ones(P, dtype=np.int64)
    lam = np.zeros((P, cap))
    lam[:, 0] = 1.0
    z = S[first] + ((s + tau) / s) * (Xq - S[first])
    live = np.ones(P, dtype=bool)
    for _ in range(max_rounds):
        for k in range(2, cap + 1):
            rows = np.flatnonzero(live & (size == k))
            if rows.size == 0:
                continue
            idx = active[rows, :k]
            prob = _Problem(Xq[rows], S[idx], vals[idx], a, b, p)
            lam0 = np.clip(lam[rows, :k], 0.0, None)
            lam0 = np.where(lam0.sum(axis=1, keepdims=True) > 0, lam0, 1.0)
            lam0 /= lam0.sum(axis=1, keepdims=True)
            zk, lk, norm = _kkt_solve(prob, z[rows], lam0)
            ok = norm <= 1e-10
            z[rows[ok]] = zk[ok]
            lam[rows[ok], :k] = lk[ok]
            live[rows[~ok]] = False
        one = np.flatnonzero(live & (size == 1))
        if one.size:
            src = S[active[one, 0]]
            z[one] = src + ((s + tau) / s) * (Xq[one] - src)
            lam[one, 0] = 1.0
        rows = np.flatnonzero(live)
        if rows.size == 0:
            break
        F = _source_values(z[rows], vals, S, s + tau, params)
        jmin = np.argmin(F, axis=1)
        fmin = F[np.arange(len(rows)), jmin]
        act = active[rows]
        fa = np.where(act >= 0, np.take_along_axis(F, np.clip(act, 0, None), axis=1), np.inf)
        r = fa.min(axis=1)
        changed = np.zeros(len(rows), dtype=bool)
        # drop the most negative multiplier
        lr = np.where(act >= 0, lam[rows], np.inf)
        worst = np.argmin(lr, axis=1)
        drop = (lr[np.arange(len(rows)), worst] < -1e-12) & (size[rows] > 1)
        for q in np.flatnonzero(drop):
            g = rows[q]
            keep = [v for k, v in enumerate(active[g, :size[g]]) if k != worst[q]]
            kl = [v for k, v in enumerate(lam[g, :size[g]]) if k != worst[q]]
            active[g] = -1
            active[g, :len(keep)] = keep
            lam[g] = 0.0
            lam[g, :len(kl)] = kl
            size[g] -= 1
            changed[q] = True
        # add the source that undercuts the active value
        undercut = ~changed & (fmin < r - 1e-13 * (1.0 + np.abs(r))) & np.isfinite(fmin)
        for q in np.flatnonzero(undercut):
            g = rows[q]
            if jmin[q] in active[g, :size[g]]:
                continue
            if size[g] < cap:
                active[g, size[g]] = jmin[q]
                lam[g, size[g]] = 0.0
                size[g] += 1
            else:
                k = int(np.argmin(lam[g, :cap]))
                active[g, k] = jmin[q]
                lam[g, k] = 0.0
            changed[q] = True
        live[rows[~changed]] = False
        if not changed.any():
            break
    return z, size


def regularized_field(phi: PotentialField, s: float, tau: float, points,
                      params: CostParams = CostParams(), starts: int = 4) -> RegularizedField:
    """Evaluate ``R(x) = sup_z min_i [phi_i + c_{s+tau}(x_i, z)] - c_tau(x, z)``.

    ``phi`` lives on finitely many sources (``+inf`` elsewhere). A single
    active source ``i`` gives the closed form ``phi_i + c_s(x_i, x)`` at
    ``z = x_i + ((s + tau)/s)(x - x_i)``. From the ``starts`` best of these,
    an active-set ascent moves to a KKT point of the max-min problem; every
    point reached is scored with the exact objective over all sources, and
    the best score is kept. The result never exceeds ``T_s phi``.
    """
    if s <= 0 or tau <= 0:
        raise ValueError("need s > 0 and tau > 0")
    Xq = as_cloud(points)
    P, D = Xq.shape
    keep = np.isfinite(phi.values)
    S, vals = phi.points[keep], phi.values[keep]
    single = vals[:, None] + kernels.pair_cost(S, Xq, params.p, s, params.null_tol)[0]  # (n, P)
    ts_phi = single.min(axis=0)
    order = np.argsort(single, axis=0, kind="stable")[:starts].T
    best = np.full(P, -np.inf)
    best_z = np.full((P, D), np.nan)
    best_k = np.zeros(P, dtype=int)
    for k in range(order.shape[1]):
        first = order[:, k]
        rows = np.flatnonzero(np.isfinite(single[first, np.arange(P)]))
        if rows.size == 0:
            continue
        z, size = _active_set_search(Xq[rows], S, vals, first[rows], s, tau, params)
        score = _max_min_objective(z, vals, S, Xq[rows], s + tau, tau, params)
        better = score > best[rows]
        best[rows[better]] = score[better]
        best_z[rows[better]] = z[better]
        best_k[rows[better]] = size[better]
    best = np.minimum(best, ts_phi)
    prov = Provenance("lax_oleinik", {"direction": "backward_forward", "s": s, "tau": tau})
    return RegularizedField(
        PotentialField(Xq, best, prov, time=s),
        PotentialField(Xq, ts_phi, Provenance("lax_oleinik", {"direction": "forward", "t": s}), time=s),
        best_z,
        best_k,
    )


@dataclass
class RegularizedPair:
    """Scaled regularized fields at times ``s`` and ``t`` and their calibration report."""

    phi_s: PotentialField
    phi_t: PotentialField
    scale: float
    report: CalibrationReport | None
    raw_s: RegularizedField
    raw_t: RegularizedField


def regularized_pair(phi: PotentialField, s: float, t: float, tau: float | None = None,
                     carrier_s=None, carrier_t=None, params: CostParams = CostParams(),
                     coupling: Coupling | None = None, starts: int = 4) -> RegularizedPair:
    """``(t-s)^-(1-p) (T^_tau T_{s+tau} phi, T^_tau T_{t+tau} phi)`` on two carriers.

    With ``coupling`` (an interpolated ``pi_{s,t}``) the carriers default to its
    marginal supports and the pair is checked for calibration against ``c``.
    """
    if not 0.0 < s < t <= 1.0:
        raise ValueError("need 0 < s < t <= 1")
    if tau is None:
        tau = (t - s) / 4.0
    if not 0.0 < tau <= min(t - s, 1.0 - t) + 1e-15:
        raise ValueError("tau must satisfy 0 < tau <= min(t - s, 1 - t)")
    if carrier_s is None:
        carrier_s = coupling.source.points
    if carrier_t is None:
        carrier_t = coupling.target.points
    raw_s = regularized_field(phi, s, tau, carrier_s, params, starts)
    raw_t = regularized_field(phi, t, tau, carrier_t, params, starts)
    scale = (t - s) ** (-(1.0 - params.p))
    fs = PotentialField(raw_s.field.points, scale * raw_s.field.values, raw_s.field.provenance, time=s)
    ft = PotentialField(raw_t.field.points, scale * raw_t.field.values, raw_t.field.provenance, time=t)
    report = calibration_check(fs, ft, coupling, params) if coupling is not None else None
    return RegularizedPair(fs, ft, scale, report, raw_s, raw_t)
