"""Hyperbola family whose c-subdifferential is unbounded near the origin."""
from __future__ import annotations

import numpy as np

from ..geometry import CostParams
from ..potentials import c_subdifferential, explicit_cconvex
from ..svg import Canvas
from .report import Report, csv_table

SEQUENCE = (1.0, 0.5, 0.1, 0.05, 0.02)
SLACK_TOL = 1e-6
BOUND_TOL = 1e-8
NORM_RTOL = 1e-6
REF = "hyperbola potential with unbounded subdifferential"


def run(p: float = 0.5, seed: int = 0, n: int = 100, box: float = 1.0, plots: bool = False) -> Report:
    params = CostParams(p=p)
    phi = explicit_cconvex({"hyperbola": {}}, params)
    psi = lambda pts: phi.psi(np.atleast_2d(pts)[:, 1])
    report = Report("unbounded-subdiff", {"p": p, "seed": seed, "n": n, "box": box, "sequence": SEQUENCE})

    rows = []
    for x1 in SEQUENCE:
        x = np.array([0.0, x1])
        y = phi.hyperbola_point(x1)
        sub = c_subdifferential(phi, psi, x, params, candidates=[y])
        s_star, _ = phi.argmax(x)
        returned = phi.hyperbola_point(s_star)
        rows.append((x1, sub.slack_at(y), float(np.linalg.norm(returned)), float(np.linalg.norm(y))))
        report.check(f"in_subdifferential_x1={x1}", REF + ": hyperbola point attains the supremum",
                     rows[-1][1], 0.0, SLACK_TOL)
        report.check(f"returned_norm_x1={x1}", REF + ": norm of the maximizing hyperbola point",
                     rows[-1][2], rows[-1][3], NORM_RTOL * rows[-1][3])
    norms = [r[2] for r in rows]
    report.check("norms_strictly_increase", REF + ": subdifferential leaves every bounded set",
                 norms, "increasing", passed=all(b > a for a, b in zip(norms, norms[1:])))

    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box, box, size=(n, 2))
    vals = phi(pts)
    excess = vals - np.abs(pts[:, 0]) ** p
    worst = float(np.max(excess))
    report.check("upper_bound_by_time_power", REF + ": phi(x) <= |x_time|^p on sampled points",
                 worst, BOUND_TOL, passed=worst <= BOUND_TOL)

    report.records["rows"] = [list(r) for r in rows]
    report.records["finite_samples"] = int(np.isfinite(vals).sum())
    report.tables["subdifferential"] = csv_table(["x1", "slack", "returned_norm", "exact_norm"], rows)
    if plots:
        s = np.geomspace(min(SEQUENCE) / 2, 4.0, 200)
        cv = Canvas.fit(np.r_[s, 0.0], np.r_[1.0 / s, 0.0], title="hyperbola and subdifferential points")
        cv.polyline(s, 1.0 / s)
        ys = np.array([phi.hyperbola_point(x1) for x1 in SEQUENCE])
        xs = np.array([[0.0, x1] for x1 in SEQUENCE])
        cv.segments(xs[:, ::-1], ys[:, ::-1])
        report.figures["hyperbola"] = cv.render()
    return report
