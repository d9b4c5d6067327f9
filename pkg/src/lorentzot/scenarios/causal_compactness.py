"""Chain potentials on a support that is not causally compact."""
from __future__ import annotations

import numpy as np

from ..geometry import CostParams
from ..measures import Coupling, Segment, figure4_map, pushforward, sample
from ..potentials import rockafellar_potential
from ..svg import coupling_figure
from ..transport import (
    build_cost_matrix,
    causal_feasible,
    certify,
    solve_primal,
    strictly_timelike_feasible,
    support_pairs,
)
from .report import Report, csv_table

REF = "three-branch map without causal compactness"


def build_instance(n: int = 64):
    """Uniform cloud on ``{0} x [-4, 4]`` and its image under the three-branch map."""
    mu = sample(Segment((0.0, -4.0), (0.0, 4.0)), n)
    nu = pushforward(mu, figure4_map)
    images = np.array([figure4_map(x) for x in mu.points])
    cols = np.array([int(np.argmin(np.abs(nu.points - y).sum(axis=1))) for y in images])
    drawn = Coupling(mu, nu, np.arange(n), cols, mu.weights)
    return mu, nu, drawn


def pick_anchor(sources, branch: str = "left") -> int:
    """Support pair used as the chain anchor.

    ``left`` picks the rightmost source with ``x <= -1``: chains only move to
    smaller ``x``, so this anchor reaches the whole left branch. ``right``
    picks the leftmost source with ``x >= 0``.
    """
    x = sources[:, 1]
    if branch == "left":
        idx = np.flatnonzero(x <= -1.0)
        return int(idx[np.argmax(x[idx])])
    if branch == "right":
        idx = np.flatnonzero(x >= 0.0)
        return int(idx[np.argmin(x[idx])])
    raise ValueError(f"unknown branch {branch!r}")


def run(p: float = 0.5, n: int = 64, anchor_branch: str = "left", tol_gap: float = 1e-9,
        plots: bool = False) -> Report:
    params = CostParams(p=p)
    mu, nu, drawn = build_instance(n)
    report = Report("causal-compactness", {"p": p, "n": n, "anchor_branch": anchor_branch})

    report.check("drawn_coupling_causal", REF + ": drawn coupling is causal", drawn.is_causal(), True)
    report.records["drawn_coupling_strictly_timelike"] = drawn.is_strictly_timelike()
    report.records["strictly_timelike_coupling_exists"] = strictly_timelike_feasible(mu, nu, params).feasible
    report.check("causal_coupling_exists", REF + ": a causal coupling exists",
                 causal_feasible(mu, nu, params).feasible, True)

    matrix = build_cost_matrix(mu, nu, params)
    result = certify(solve_primal(matrix, mu, nu), matrix, tol_gap)
    report.check("solver_optimal", REF + ": linear program solved", result.status.value, "Optimal")
    if not result.optimal:
        return report
    drawn_cost = float(sum(matrix.values[i, j] * m for i, j, m in drawn.entries))
    report.check("drawn_coupling_optimal", REF + ": drawn coupling attains the optimum",
                 result.primal_value, drawn_cost, tol_gap)
    report.check("certificates", REF + ": optimality certificates",
                 [c.feasible for c in result.certificates], True,
                 passed=all(c.feasible for c in result.certificates))

    xs, ys = support_pairs(result)
    anchor = pick_anchor(xs, anchor_branch)
    query = mu.points
    phi = rockafellar_potential(xs, ys, params, anchor, query)
    x = query[:, 1]
    right = x >= 0.0
    left = x <= -1.0
    middle = ~right & ~left
    report.records["anchor"] = xs[anchor]
    report.records["finite_counts"] = {
        "left": [int(np.isfinite(phi.values[left]).sum()), int(left.sum())],
        "middle": [int(np.isfinite(phi.values[middle]).sum()), int(middle.sum())],
        "right": [int(np.isfinite(phi.values[right]).sum()), int(right.sum())],
    }
    if anchor_branch == "left":
        report.check("minus_infinity_for_nonnegative_x", REF + ": chain potential is -inf for x >= 0",
                     report.records["finite_counts"]["right"][0], 0)
        report.check("finite_on_left_branch", REF + ": chain potential is finite on the left branch",
                     report.records["finite_counts"]["left"][0], int(left.sum()))
    else:
        report.check("finite_everywhere_from_right_anchor", REF + ": a right anchor reaches every pair",
                     int(np.isfinite(phi.values).sum()), len(x))

    report.tables["potential"] = csv_table(["x", "phi"], [(float(a), float(v)) for a, v in zip(x, phi.values)])
    if plots:
        report.figures["coupling"] = coupling_figure(xs, ys, "three-branch coupling")
    return report
