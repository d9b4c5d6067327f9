"""Displacement interpolation and Lax-Oleinik regularization of a kinked potential."""
from __future__ import annotations

import numpy as np

from ..geometry import CostParams
from ..grid import UniformGrid
from ..measures import Ball, DiracMixture, DiscreteMeasure, sample
from ..potentials import rockafellar_potential, semiconcavity_diagnostic, semiconvexity_diagnostic
from ..svg import grid_heatmap
from ..transport import build_cost_matrix, certify, solve_primal, support_pairs
from ..weakkam import (
    DynamicalCoupling,
    coupling_cost,
    displacement_interpolate,
    geodesic_calibration_residual,
    minimizing_sources,
    regularized_field,
    regularized_pair,
)
from .report import Report, csv_table

STEPS = (0.02, 0.01, 0.005)
PATCH_RADIUS = 0.06
CONSTANT_BOUND = 5.0
GROWTH = 1.8
IDENTITY_TOL = 1e-9
CALIBRATION_TOL = 1e-6
SUBSOLUTION_TOL = 1e-8
GEODESIC_TOL = 1e-10
SMOOTH_TOL = 1e-3
TIME_PAIRS = ((0.0, 0.5), (0.25, 0.75), (0.1, 0.9), (0.5, 1.0))
REF_INTERP = "displacement interpolation cost is affine in time"
REF_REG = "Lax-Oleinik regularization is C^{1,1}"


def build_instance(n: int = 20, radius: float = 0.15, spread: float = 0.6, height: float = 2.0):
    """Sunflower cloud around the origin sent to two atoms in its future."""
    mu = sample(Ball((0.0, 0.0), radius), n)
    nu = sample(DiracMixture([[height, -spread], [height, spread]], [0.5, 0.5]))
    return mu, nu


def kink_center(phi, dyn: DynamicalCoupling, s: float, params: CostParams, step: float = 0.005) -> np.ndarray:
    """Point where the minimizer of ``T_s phi`` switches between sources bound for different targets.

    Among all switching points on a grid covering the time-``s`` positions,
    the one closest to their centroid is returned.
    """
    pos = dyn.at(s)
    grid = UniformGrid.from_bounds(pos.min(axis=0) - 0.05, pos.max(axis=0) + 0.05, step)
    target_of = np.full(len(phi.points), -1)
    target_of[dyn.coupling.rows] = dyn.coupling.cols
    labels = target_of[minimizing_sources(phi, s, grid.points(), params)].reshape(grid.shape)
    switch = np.argwhere(labels[:, 1:] != labels[:, :-1])
    pts = grid.origin + step * switch
    return pts[int(np.argmin(np.linalg.norm(pts - pos.mean(axis=0), axis=1)))]


def _solve(mu, nu, params):
    matrix = build_cost_matrix(mu, nu, params)
    result = certify(solve_primal(matrix, mu, nu), matrix)
    xs, ys = support_pairs(result)
    phi = rockafellar_potential(xs, ys, params, 0, mu.points)
    return result, phi


def run(p: float = 0.5, n: int = 20, s: float = 0.25, t: float = 0.75, tau: float = 0.125,
        plots: bool = False) -> Report:
    params = CostParams(p=p)
    mu, nu = build_instance(n)
    report = Report("c11-interpolation", {"p": p, "n": n, "s": s, "t": t, "tau": tau, "steps": STEPS})
    result, phi = _solve(mu, nu, params)
    report.check("solver_optimal", REF_INTERP + ": base problem solved", result.status.value, "Optimal")
    if not result.optimal:
        return report
    dyn = DynamicalCoupling(result.coupling, params)
    total = result.primal_value

    mu_s, mu_t, pi = displacement_interpolate(dyn, s, t)
    value = coupling_cost(pi, params, time=t - s)
    report.check("interpolation_cost_identity", REF_INTERP + ": C(mu_s, mu_t) = (t - s) C(mu_0, mu_1)",
                 value, (t - s) * total, IDENTITY_TOL)
    sub = solve_primal(build_cost_matrix(mu_s, mu_t, params, time=t - s), mu_s, mu_t)
    report.check("interpolated_coupling_optimal", REF_INTERP + ": linear program on the interpolants",
                 sub.primal_value, value, IDENTITY_TOL)
    slopes = []
    for a, b in TIME_PAIRS:
        _, _, pair = displacement_interpolate(dyn, a, b)
        slopes.append(coupling_cost(pair, params, time=b - a) / (b - a))
    spread = max(abs(v - total) for v in slopes)
    report.check("interpolation_affine", REF_INTERP + ": slope equals C(mu_0, mu_1)", spread, 0.0, IDENTITY_TOL)
    geo = geodesic_calibration_residual(phi, dyn, (0.0, s, 0.5, t, 1.0), params)
    report.check("geodesic_calibration", REF_INTERP + ": evolved potential is calibrated along geodesics",
                 geo, 0.0, GEODESIC_TOL)

    center = kink_center(phi, dyn, s, params)
    rows, reg_cvx, reg_ccv, raw_cvx, cal, violation = [], [], [], [], [], []
    finest = None
    for h in STEPS:
        grid = UniformGrid.centered(center, h, int(round(PATCH_RADIUS / h)))
        carrier_s = np.concatenate([mu_s.points, grid.points()])
        pair = regularized_pair(phi, s, t, tau, carrier_s, mu_t.points, params, coupling=pi)
        patch = pair.raw_s.field.values[len(mu_s):].reshape(grid.shape)
        raw = pair.raw_s.unregularized.values[len(mu_s):].reshape(grid.shape)
        reg_cvx.append(semiconvexity_diagnostic(patch, h))
        reg_ccv.append(semiconcavity_diagnostic(patch, h))
        raw_cvx.append(semiconvexity_diagnostic(raw, h))
        cal.append(pair.report.calibration_residual)
        violation.append(pair.report.subsolution_violation)
        rows.append((h, reg_cvx[-1], reg_ccv[-1], raw_cvx[-1], cal[-1], violation[-1]))
        finest = (grid, patch)
    report.check("regularized_calibrated", REF_REG + ": calibrated on pi_{s,t}", max(cal), 0.0, CALIBRATION_TOL)
    report.check("regularized_subsolution", REF_REG + ": subsolution on the carriers",
                 max(violation), 0.0, SUBSOLUTION_TOL)
    report.check("regularized_semiconvexity_bounded", REF_REG + ": semiconvexity constant stays bounded",
                 reg_cvx, CONSTANT_BOUND, passed=max(reg_cvx) <= CONSTANT_BOUND)
    report.check("regularized_semiconcavity_bounded", REF_REG + ": semiconcavity constant stays bounded",
                 reg_ccv, CONSTANT_BOUND, passed=max(reg_ccv) <= CONSTANT_BOUND)
    ratios = [raw_cvx[k + 1] / raw_cvx[k] if raw_cvx[k] > 0 else 0.0 for k in range(len(raw_cvx) - 1)]
    report.check("unregularized_blowup", REF_REG + ": unregularized semiconvexity grows at the kink",
                 ratios, GROWTH, passed=all(r >= GROWTH for r in ratios))

    # control: a single source has a smooth forward evolution already
    x0 = mu.points[:1]
    y0 = nu.points[:1]
    _, phi1 = _solve(DiscreteMeasure.uniform(x0), DiscreteMeasure.uniform(y0), params)
    mid = x0[0] + s * (y0[0] - x0[0])
    grid1 = UniformGrid.centered(mid, STEPS[1], int(round(PATCH_RADIUS / STEPS[1])))
    control = regularized_field(phi1, s, tau, grid1.points(), params)
    change = float(np.max(np.abs(control.field.values - control.unregularized.values)))
    report.check("single_source_control", REF_REG + ": smooth potential is left unchanged",
                 change, 0.0, SMOOTH_TOL)

    report.records["kink_center"] = center
    report.records["total_cost"] = total
    report.records["slopes"] = slopes
    report.records["refinement"] = [list(r) for r in rows]
    report.tables["refinement"] = csv_table(
        ["h", "regularized_semiconvexity", "regularized_semiconcavity", "unregularized_semiconvexity",
         "calibration_residual", "subsolution_violation"], rows)
    if plots:
        grid, patch = finest
        report.figures["regularized_patch"] = grid_heatmap(patch, grid, "regularized field near the kink")
    return report
