"""Two-atom c-convex function that jumps on the boundary of a causal past."""
from __future__ import annotations

import numpy as np

from ..geometry import CausalClass, CostParams, classify, lorentz_distance
from ..grid import UniformGrid
from ..potentials import evaluate_on_grid, explicit_cconvex, semiconvexity_diagnostic
from ..svg import grid_heatmap
from .report import Report, csv_table

Y1 = (2.0, 2.0)
Y0 = (2.0, -2.0)
X0 = (-1.0, -1.0)
BOUNDED_CENTER = (-2.0, 0.0)
STEPS = (0.04, 0.02, 0.01)
BOUNDED_RADIUS = 0.24
CROSSING_RADIUS = 0.08
SEMICONVEX_BOUND = 10.0
REF = "two-atom discontinuous c-convex function"


def build_potential(a: float = -10.0, params: CostParams = CostParams()):
    """``phi(x) = max(-c(x, y1), a - c(x, y0))`` as an atomic c-convex evaluator."""
    return explicit_cconvex({"atoms": [[list(Y1), 0.0], [list(Y0), a]]}, params)


def _patch_constants(phi, center, radius):
    rows = []
    for h in STEPS:
        grid = UniformGrid.centered(center, h, int(round(radius / h)))
        field = evaluate_on_grid(phi, grid)
        rows.append((h, semiconvexity_diagnostic(field.grid_values(), h)))
    return rows


def run(p: float = 0.5, a: float = -10.0, plots: bool = False) -> Report:
    params = CostParams(p=p)
    phi = build_potential(a, params)
    report = Report("discontinuity", {"p": p, "a": a, "y1": Y1, "y0": Y0, "x0": X0, "steps": STEPS})
    x0 = np.array(X0)

    at_x0 = float(phi(x0)[0])
    report.check("phi_at_x0_is_zero", REF + ": value at the null-related base point", at_x0, 0.0)

    d0 = lorentz_distance(X0, Y0)
    expected_limit = a + d0 ** p
    seq = []
    for k in range(1, 11):
        delta = 10.0 ** (-k)
        x = np.array([X0[0], X0[1] - delta])
        inside = classify(x, Y0) == CausalClass.TIMELIKE_FUTURE and classify(x, Y1) == CausalClass.SPACELIKE
        seq.append((delta, float(phi(x)[0]), inside))
    limit = seq[-1][1]
    report.check("approach_stays_outside_past_of_y1", REF + ": approach sequence region",
                 all(s[2] for s in seq), True)
    report.check("one_sided_limit", REF + ": limit a - c(x0, y0) from outside the past of y1",
                 limit, expected_limit, 1e-10)
    gap = at_x0 - limit
    report.check("discontinuity_gap", REF + ": jump |a| - d(x0, y0)^p", gap, abs(a) - d0 ** p, 1e-9)

    bounded = _patch_constants(phi, BOUNDED_CENTER, BOUNDED_RADIUS)
    worst = max(k for _, k in bounded)
    report.check("bounded_patch_semiconvexity", REF + ": semiconvex away from the null lines",
                 worst, SEMICONVEX_BOUND, passed=worst <= SEMICONVEX_BOUND)
    crossing = _patch_constants(phi, X0, CROSSING_RADIUS)
    ratios = [crossing[i + 1][1] / crossing[i][1] if crossing[i][1] > 0 else 0.0
              for i in range(len(crossing) - 1)]
    report.check("crossing_patch_blowup", REF + ": constant at least doubles per halving across x0",
                 ratios, 2.0, passed=all(r >= 2.0 for r in ratios))

    report.records["approach"] = [[d, v] for d, v, _ in seq]
    report.records["bounded_patch"] = bounded
    report.records["crossing_patch"] = crossing
    report.tables["refinement"] = csv_table(
        ["h", "bounded_constant", "crossing_constant"],
        [(b[0], b[1], c[1]) for b, c in zip(bounded, crossing)])
    if plots:
        grid = UniformGrid.from_bounds([-3.0, -3.0], [1.0, 3.0], 0.05)
        field = evaluate_on_grid(phi, grid)
        report.figures["potential"] = grid_heatmap(field.values, grid, "two-atom potential")
    return report
