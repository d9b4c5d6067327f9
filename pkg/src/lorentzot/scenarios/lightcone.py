"""Optimal coupling that touches the light cone although a timelike one exists."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..geometry import CostParams, cost, lorentz_distance
from ..measures import DiscreteMeasure, RoundedRectangle, sample
from ..svg import coupling_figure
from ..transport import (
    build_cost_matrix,
    certify,
    check_cyclical_monotonicity,
    solve_primal,
    strictly_timelike_feasible,
    support_pairs,
)
from .report import Report, csv_table

# [t, x] coordinates
X0 = (0.0, 0.0)
Y0 = (1.0, -1.0)
Y1 = (4.0, 3.0)
X1 = (-3.0, 3.0)
MASS_MARGIN = 0.05
REF = "light-cone touching optimal coupling"


def build_instance(n: int = 400, eps: float = 0.05, thickness: float = 1.0, seed: int = 0):
    """Source cloud on the rounded rectangle and the two-atom target."""
    density = RoundedRectangle(upper_left=(-eps, eps), thickness=thickness)
    mu = sample(density, n, seed=seed)
    nu = DiscreteMeasure([Y0, Y1], [0.5, 0.5])
    return density, mu, nu


def run(p: float = 0.5, n: int = 400, eps: float = 0.05, thickness: float = 1.0, seed: int = 0,
        tol_gap: float = 1e-9, plots: bool = False) -> Report:
    params = CostParams(p=p)
    density, mu, nu = build_instance(n, eps, thickness, seed)
    report = Report("lightcone-coupling", {"p": p, "n": n, "eps": eps, "thickness": thickness, "seed": seed})

    mass = density.right_region_mass()
    report.check("heavy_right_end", REF + ": mass of the right end exceeds one half",
                 mass, 0.5 + MASS_MARGIN, passed=mass >= 0.5 + MASS_MARGIN)

    feasible = strictly_timelike_feasible(mu, nu, params)
    report.check("strictly_timelike_coupling_exists", REF + ": a strictly timelike coupling exists",
                 feasible.feasible, True)

    matrix = build_cost_matrix(mu, nu, params)
    result = certify(solve_primal(matrix, mu, nu), matrix, tol_gap)
    report.check("solver_optimal", REF + ": linear program solved", result.status.value, "Optimal")
    if not result.optimal:
        return report
    for cert in result.certificates:
        report.check(f"certificate_{cert.kind.value}", REF + ": optimality certificate",
                     cert.gap if cert.gap is not None else cert.feasible, None, tol_gap, passed=cert.feasible)

    X = mu.points
    spacing = float(cKDTree(X).query(X, 2)[0][:, 1].max())
    eps_cone = 2.0 * spacing ** p
    near = 2.0 * spacing + eps
    xs, ys = support_pairs(result)
    to_y0 = np.all(ys == np.array(Y0), axis=1)
    dist_x0 = np.linalg.norm(xs - np.array(X0), axis=1)
    d_y0 = np.array([lorentz_distance(x, Y0, params.null_tol) for x in xs])
    touching = to_y0 & (dist_x0 <= near) & (d_y0 <= eps_cone)
    closest = int(np.argmin(np.where(to_y0, dist_x0, np.inf)))
    report.check("coupling_touches_null_cone", REF + ": an entry near x0 is transported almost null to y0",
                 float(d_y0[closest]), eps_cone, passed=bool(touching.any()))

    x_prime = X[int(np.argmin(np.linalg.norm(X - np.array(X1), axis=1)))]
    cert = check_cyclical_monotonicity([X0, x_prime], [Y1, Y0], params)
    report.check("exchange_forms_negative_cycle", REF + ": pairs (x0, y1), (x', y0) are not monotone",
                 cert.detail.get("excess", 0.0), "negative", passed=not cert.feasible)
    arc = cost(X0, Y1, params)
    report.check("cost_x0_y1", REF + ": cost on the (x0, y1) arc", arc, -(7.0 ** (p / 2)), 1e-12)

    d_x1y1 = lorentz_distance(X1, Y1)
    report.records["readings_of_c_x1_y1"] = {"computed": -(d_x1y1 ** p), "literal": -(4.0 ** p)}
    report.records["exchange_inequality"] = {
        "swapped": arc + cost(X1, Y0, params),
        "computed_reading_holds": bool(arc + cost(X1, Y0, params) > -(d_x1y1 ** p)),
        "literal_reading_holds": bool(arc + cost(X1, Y0, params) > -(4.0 ** p)),
    }
    report.records["sampling_gap"] = spacing
    report.records["eps_cone"] = eps_cone
    report.records["primal_value"] = result.primal_value
    report.records["x_prime"] = x_prime
    report.records["right_region_sample_fraction"] = float(density.in_right_region(X).mean())
    report.records["nearest_to_x0"] = {"point": xs[closest], "distance": float(dist_x0[closest]),
                                       "lorentz_distance_to_y0": float(d_y0[closest])}

    report.tables["coupling"] = csv_table(
        ["t", "x", "target_t", "target_x", "mass"],
        [(float(a[0]), float(a[1]), float(b[0]), float(b[1]), float(m))
         for a, b, m in zip(xs, ys, result.coupling.mass)])
    if plots:
        report.figures["coupling"] = coupling_figure(xs, ys, "optimal coupling")
    return report
