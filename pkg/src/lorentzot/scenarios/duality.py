"""Randomized strong-duality and cyclical-monotonicity battery."""
from __future__ import annotations

import numpy as np

from ..geometry import CostParams
from ..measures import DiscreteMeasure
from ..potentials import c_transform, rockafellar_potential
from ..transport import (
    GAP_TOL,
    build_cost_matrix,
    certify,
    check_cyclical_monotonicity,
    permutation_minimum,
    solve_primal,
    support_pairs,
)
from .report import Report, csv_table

BRUTE_TOL = 1e-10
CALIBRATION_TOL = 1e-8
NEAR_NULL_GAP_TOL = 1e-8
MAX_SIZE = 12
MAX_BRUTE = 8
REF_DUALITY = "strong Kantorovich duality"
REF_MONOTONE = "optimality iff c-cyclical monotonicity"
REF_POTENTIAL = "chain-built potential solves the dual"


def random_instance(rng, square: bool):
    """Clouds in ``[0,1] x [-1,1]`` and ``[4,5] x [-1,1]``: every pair is strictly timelike."""
    if square:
        n = m = int(rng.integers(1, MAX_BRUTE + 1))
    else:
        n, m = (int(v) for v in rng.integers(1, MAX_SIZE + 1, size=2))
    X = np.c_[rng.uniform(0, 1, n), rng.uniform(-1, 1, n)]
    Y = np.c_[rng.uniform(4, 5, m), rng.uniform(-1, 1, m)]
    if square:
        return DiscreteMeasure.uniform(X), DiscreteMeasure.uniform(Y)
    a = rng.uniform(0.1, 1.0, n)
    b = rng.uniform(0.1, 1.0, m)
    return DiscreteMeasure(X, a / a.sum()), DiscreteMeasure(Y, b / b.sum())


def near_null_instance(rng):
    """Targets placed just inside the light cone of a random source."""
    n = int(rng.integers(2, MAX_SIZE + 1))
    X = np.c_[rng.uniform(0, 0.1, n), rng.uniform(-0.1, 0.1, n)]
    base = X[rng.integers(0, n, n)]
    lean = 1.0 - 10.0 ** rng.uniform(-8, -3, n)
    Y = base + np.c_[np.full(n, 2.0), 2.0 * lean * rng.choice([-1.0, 1.0], n)]
    return DiscreteMeasure.uniform(X), DiscreteMeasure.uniform(Y)


def potential_residuals(result, params: CostParams):
    """Calibration residual on the support and worst subsolution violation."""
    mu, nu = result.coupling.source, result.coupling.target
    xs, ys = support_pairs(result)
    phi = rockafellar_potential(xs, ys, params, 0, mu.points)
    psi = c_transform(phi, nu.points, params)
    C = build_cost_matrix(mu, nu, params).values
    slack = psi.values[None, :] - phi.values[:, None] - C
    slack = np.where(np.isfinite(C), slack, -np.inf)
    on_support = np.abs(slack[result.coupling.rows, result.coupling.cols])
    return float(on_support.max()), float(max(slack.max(), 0.0))


def run(seed: int = 7, trials: int = 200, near_null: int = 20, p: float = 0.5, tol_gap: float = GAP_TOL,
        plots: bool = False) -> Report:
    params = CostParams(p=p)
    rng = np.random.default_rng(seed)
    report = Report("duality-battery", {"seed": seed, "trials": trials, "near_null": near_null, "p": p})
    rows = []
    failures = {"not_optimal": 0, "gap": 0, "support_cycle": 0, "brute_force": 0,
                "equivalence": 0, "calibration": 0, "subsolution": 0}
    worst = {"gap": 0.0, "brute_force": 0.0, "calibration": 0.0, "subsolution": 0.0}
    permutations = {"optimal": 0, "not_optimal": 0}
    for k in range(trials):
        square = k % 2 == 0
        if k == 0:
            mu = DiscreteMeasure.uniform(rng.uniform(0, 1, (1, 2)) * [1, 2] - [0, 1])
            nu = DiscreteMeasure.uniform([[4.5, 0.0]])
        else:
            mu, nu = random_instance(rng, square)
        matrix = build_cost_matrix(mu, nu, params)
        result = certify(solve_primal(matrix, mu, nu), matrix, tol_gap)
        if not result.optimal:
            failures["not_optimal"] += 1
            continue
        gap = abs(result.certificates[0].gap)
        worst["gap"] = max(worst["gap"], gap)
        failures["gap"] += gap > tol_gap
        failures["support_cycle"] += not result.certificates[1].feasible
        brute = None
        if square:
            brute = permutation_minimum(matrix)
            err = abs(brute - result.primal_value)
            worst["brute_force"] = max(worst["brute_force"], err)
            failures["brute_force"] += err > BRUTE_TOL
            # a random permutation is optimal exactly when it admits no negative cycle
            n = len(mu)
            perm = rng.permutation(n)
            value = float(matrix.values[np.arange(n), perm].mean())
            cert = check_cyclical_monotonicity(mu.points, nu.points[perm], params)
            is_optimal = value <= brute + BRUTE_TOL
            permutations["optimal" if is_optimal else "not_optimal"] += 1
            failures["equivalence"] += is_optimal != cert.feasible
        cal, sub = potential_residuals(result, params)
        worst["calibration"] = max(worst["calibration"], cal)
        worst["subsolution"] = max(worst["subsolution"], sub)
        failures["calibration"] += cal > CALIBRATION_TOL
        failures["subsolution"] += sub > CALIBRATION_TOL
        rows.append((k, len(mu), len(nu), result.primal_value, gap, "" if brute is None else brute, cal, sub))

    report.check("all_trials_optimal", REF_DUALITY + ": every instance solved", failures["not_optimal"], 0)
    report.check("dual_gap", REF_DUALITY + ": primal equals dual", worst["gap"], 0.0, tol_gap)
    report.check("optimal_support_monotone", REF_MONOTONE + ": optimal supports admit no negative cycle",
                 failures["support_cycle"], 0)
    report.check("brute_force_match", REF_DUALITY + ": solver value equals permutation minimum",
                 worst["brute_force"], 0.0, BRUTE_TOL)
    report.check("optimal_iff_no_cycle", REF_MONOTONE + ": random permutations", failures["equivalence"], 0)
    report.check("chain_potential_calibrated", REF_POTENTIAL + ": equality on the support",
                 worst["calibration"], 0.0, CALIBRATION_TOL)
    report.check("chain_potential_subsolution", REF_POTENTIAL + ": inequality on every pair",
                 worst["subsolution"], 0.0, CALIBRATION_TOL)

    near_gap, infeasible = 0.0, 0
    for _ in range(near_null):
        mu, nu = near_null_instance(rng)
        matrix = build_cost_matrix(mu, nu, params)
        result = certify(solve_primal(matrix, mu, nu), matrix, NEAR_NULL_GAP_TOL)
        if not result.optimal:
            infeasible += 1
            continue
        near_gap = max(near_gap, abs(result.certificates[0].gap))
    report.check("near_null_gap", REF_DUALITY + ": instances close to the light cone",
                 near_gap, 0.0, NEAR_NULL_GAP_TOL)
    report.records["failures"] = failures
    report.records["worst"] = worst
    report.records["random_permutations"] = permutations
    report.records["near_null_infeasible"] = infeasible
    report.tables["trials"] = csv_table(
        ["trial", "n", "m", "value", "gap", "brute_force", "calibration", "subsolution"], rows)
    return report
