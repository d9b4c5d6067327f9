"""Acceptance criteria 1 to 8.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line per
criterion as it finishes; the same lines are repeated in the terminal summary.
"""
import time

import numpy as np

from conftest import random_timelike_vectors
from lorentzot.geometry import CostParams, hamiltonian, legendre, legendre_inverse, minkowski_norm
from lorentzot.potentials import PotentialField, rockafellar_potential
from lorentzot.scenarios import causal_compactness, run
from lorentzot.transport import build_cost_matrix, solve_primal, support_pairs
from lorentzot.weakkam import lax_backward, lax_forward

P = 0.5
ROUNDING = 8 * np.finfo(float).eps


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def checks_of(report):
    return {a.name: a for a in report.assertions}


def within(value, expected, tol):
    return bool(abs(value - expected) <= tol)


_BATTERY = {}


def battery():
    if "report" not in _BATTERY:
        _BATTERY["report"], _BATTERY["seconds"] = timed(run, "duality-battery", seed=7, trials=200)
    return _BATTERY["report"], _BATTERY["seconds"]


def test_criterion_1_duality_battery(criterion):
    report, seconds = battery()
    c = checks_of(report)
    perms = report.records["random_permutations"]
    criterion(1, "strong duality battery, 200 seeded trials", [
        ("every_trial_optimal", c["all_trials_optimal"].value == 0, c["all_trials_optimal"].value),
        ("max_gap<=1e-9", c["dual_gap"].value <= 1e-9, f"{c['dual_gap'].value:.2e}"),
        ("optimal_supports_cycle_free", c["optimal_support_monotone"].value == 0,
         c["optimal_support_monotone"].value),
        ("optimal_iff_no_cycle", c["optimal_iff_no_cycle"].value == 0 and min(perms.values()) > 0,
         f"{perms['optimal']}+{perms['not_optimal']} permutations"),
        ("brute_force<=1e-10", c["brute_force_match"].value <= 1e-10, f"{c['brute_force_match'].value:.2e}"),
        ("runtime<10s", seconds < 10.0, f"{seconds:.2f}s"),
    ])


def test_criterion_2_pi_solution(criterion):
    report, _ = battery()
    c = checks_of(report)
    criterion(2, "chain-built potential is a pi-solution on every optimal support", [
        ("calibration<=1e-8", c["chain_potential_calibrated"].value <= 1e-8,
         f"{c['chain_potential_calibrated'].value:.2e}"),
        ("subsolution", c["chain_potential_subsolution"].value <= 1e-8,
         f"{c['chain_potential_subsolution'].value:.2e}"),
    ])


def test_criterion_3_lightcone(criterion):
    report, seconds = timed(run, "lightcone-coupling", p=P, n=400)
    c = checks_of(report)
    sweep = [(eps, th) for eps in (0.02, 0.1) for th in (0.5, 1.5)]
    sweep_failures = [g for g in sweep if not run("lightcone-coupling", p=P, n=400, eps=g[0], thickness=g[1]).passed]
    criterion(3, "optimal coupling touches the light cone, n=400", [
        ("optimal", c["solver_optimal"].passed, c["solver_optimal"].value),
        ("entry_within_eps_cone", c["coupling_touches_null_cone"].passed,
         f"d={c['coupling_touches_null_cone'].value:.3f}<=eps_cone={report.records['eps_cone']:.3f}"),
        ("strictly_timelike_feasible", c["strictly_timelike_coupling_exists"].value is True, True),
        ("negative_exchange_cycle", c["exchange_forms_negative_cycle"].passed,
         f"excess={c['exchange_forms_negative_cycle'].value:.3f}"),
        ("arc_cost", within(c["cost_x0_y1"].value, -(7 ** 0.25), 1e-12) and within(c["cost_x0_y1"].value, -1.62658, 1e-5),
         f"{c['cost_x0_y1'].value:.5f}"),
        ("runtime<30s", seconds < 30.0, f"{seconds:.2f}s"),
        ("rectangle_eps_thickness_sweep", not sweep_failures, f"{len(sweep) - len(sweep_failures)}/{len(sweep)}"),
    ])


def test_criterion_4_causal_compactness(criterion):
    params = CostParams(P)
    results = []
    for n in (16, 64):
        report = run("causal-compactness", p=P, n=n)
        c = checks_of(report)
        mu, nu, _ = causal_compactness.build_instance(n)
        result = solve_primal(build_cost_matrix(mu, nu, params), mu, nu)
        xs, ys = support_pairs(result)
        anchor = causal_compactness.pick_anchor(xs, "left")
        query = np.c_[np.zeros(41), np.linspace(0.0, 4.0, 41)]
        dense = rockafellar_potential(xs, ys, params, anchor, query).values
        results += [
            (f"n={n}_minus_inf_for_x>=0", c["minus_infinity_for_nonnegative_x"].passed and bool(np.all(dense == -np.inf)),
             f"{report.records['finite_counts']['right'][0]} finite of {report.records['finite_counts']['right'][1]}"),
            (f"n={n}_finite_on_left", c["finite_on_left_branch"].passed,
             "{}/{}".format(*report.records["finite_counts"]["left"])),
        ]
    criterion(4, "left-anchored chain potential on the three-branch instance", results)


def test_criterion_5_discontinuity(criterion):
    report = run("discontinuity", p=P, a=-10.0)
    c = checks_of(report)
    limit = c["one_sided_limit"].value
    ratios = c["crossing_patch_blowup"].value
    bounded = report.records["bounded_patch"]
    criterion(5, "two-atom potential, a=-10, p=1/2", [
        ("phi(x0)==0", c["phi_at_x0_is_zero"].value == 0.0, c["phi_at_x0_is_zero"].value),
        ("limit=-10+8^(1/4)", within(limit, -10.0 + 8 ** 0.25, 1e-10), f"{limit:.12f}"),
        ("bounded_patch<=10", c["bounded_patch_semiconvexity"].passed, bounded),
        ("crossing_patch_doubles", all(r >= 2.0 for r in ratios), [round(r, 3) for r in ratios]),
    ])


def test_criterion_6_unbounded_subdifferential(criterion):
    report = run("unbounded-subdiff", p=P, n=100)
    c = checks_of(report)
    rows = []
    for x1 in (0.5, 0.1, 0.05, 0.02):
        slack = c[f"in_subdifferential_x1={x1}"].value
        rows.append((f"slack(x1={x1})<=1e-6", abs(slack) <= 1e-6, f"{slack:.1e}"))
    bound = c["upper_bound_by_time_power"].value
    rows.append(("phi<=|x2|^p+1e-8 on 100 points", bound <= 1e-8 and report.records["finite_samples"] > 0,
                 f"max excess {bound:.4f}"))
    norms = c["norms_strictly_increase"].value
    rows.append(("norms_increase", all(b > a for a, b in zip(norms, norms[1:])), [round(v, 3) for v in norms]))
    criterion(6, "hyperbola potential has an unbounded subdifferential", rows)


def test_criterion_7_semigroups_and_legendre(criterion):
    rng = np.random.default_rng(2024)
    params = CostParams(P)
    worst_back = worst_fwd = worst_split = worst_way = -np.inf
    for _ in range(200):
        X = np.c_[rng.uniform(0, 1, 6), rng.uniform(-1, 1, 6)]
        Y = np.c_[rng.uniform(2, 3, 5), rng.uniform(-1, 1, 5)]
        Z = np.c_[rng.uniform(0.5, 2.5, 15), rng.uniform(-1.5, 1.5, 15)]
        u = PotentialField(X, 3 * rng.normal(size=6))
        v = PotentialField(Y, 3 * rng.normal(size=5))
        t, s = rng.uniform(0.1, 1.0, 2)
        back = lax_backward(lax_forward(u, t, Y, params), t, X, params).values
        worst_back = max(worst_back, np.max((back - u.values) / (1 + np.abs(u.values))))
        fwd = lax_forward(lax_backward(v, t, X, params), t, Y, params).values
        worst_fwd = max(worst_fwd, np.max((v.values - fwd) / (1 + np.abs(v.values))))
        full = lax_forward(u, t + s, Y, params).values
        split = lax_forward(lax_forward(u, s, Z, params), t, Y, params).values
        worst_split = max(worst_split, np.max(full - split))
        waypoints = (X[:, None, :] + s / (t + s) * (Y[None, :, :] - X[:, None, :])).reshape(-1, 2)
        carried = lax_forward(lax_forward(u, s, np.r_[Z, waypoints], params), t, Y, params).values
        worst_way = max(worst_way, np.max(np.abs(full - carried)))

    vectors = random_timelike_vectors(rng, 1000, dim=2)
    ham = max(abs(hamiltonian(legendre(w, params), params) - (1 - P) * minkowski_norm(w) ** P) for w in vectors)
    trip = max(np.max(np.abs(legendre_inverse(legendre(w, params), params) - w)) for w in vectors)
    criterion(7, "Lax-Oleinik laws on finite carriers and the Legendre transform", [
        ("backward_forward<=Id", worst_back <= ROUNDING, f"max excess {worst_back:.1e}"),
        ("forward_backward>=Id", worst_fwd <= ROUNDING, f"max deficit {worst_fwd:.1e}"),
        ("T_t+s<=T_tT_s", worst_split <= 0.0, f"max excess {worst_split:.1e}"),
        ("equality_with_waypoints<=1e-10", worst_way <= 1e-10, f"{worst_way:.1e}"),
        ("hamiltonian<=1e-12", ham <= 1e-12, f"{ham:.1e}"),
        ("legendre_round_trip<=1e-10", trip <= 1e-10, f"{trip:.1e}"),
    ])


def test_criterion_8_interpolation_and_regularity(criterion):
    report, seconds = timed(run, "c11-interpolation", p=P)
    c = checks_of(report)
    ratios = c["unregularized_blowup"].value
    criterion(8, "displacement interpolation and C^{1,1} regularization", [
        ("C(mu_s,mu_t)=(t-s)C", c["interpolation_cost_identity"].passed,
         f"{abs(c['interpolation_cost_identity'].value - c['interpolation_cost_identity'].expected):.1e}"),
        ("lp_confirms", c["interpolated_coupling_optimal"].passed, report.parameters["n"]),
        ("calibration<=1e-6", c["regularized_calibrated"].value <= 1e-6, f"{c['regularized_calibrated'].value:.1e}"),
        ("semiconvexity_bounded", c["regularized_semiconvexity_bounded"].passed,
         [round(v, 3) for v in c["regularized_semiconvexity_bounded"].value]),
        ("semiconcavity_bounded", c["regularized_semiconcavity_bounded"].passed,
         [round(v, 3) for v in c["regularized_semiconcavity_bounded"].value]),
        ("unregularized_growth>=1.8", all(r >= 1.8 for r in ratios), [round(r, 2) for r in ratios]),
        ("runtime<60s", seconds < 60.0, f"{seconds:.2f}s"),
    ])
