import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzot.geometry import CostParams, NotCausalError, cost_t
from lorentzot.measures import Coupling, DiscreteMeasure
from lorentzot.potentials import PotentialField, c_transform, rockafellar_potential
from lorentzot.scenarios import interpolation
from lorentzot.transport import build_cost_matrix, certify, solve_primal, support_pairs
from lorentzot.weakkam import (
    DynamicalCoupling,
    calibration_check,
    coupling_cost,
    displacement_interpolate,
    geodesic_calibration_residual,
    lax_backward,
    lax_forward,
    minimizing_sources,
    regularized_field,
    regularized_pair,
)

HALF = CostParams(0.5)
# the composed semigroup inequalities hold without slack in exact arithmetic;
# in floating point each value carries a few ulps of rounding
ROUNDING = 8 * np.finfo(float).eps


def carriers(rng, n=6, m=5):
    X = np.c_[rng.uniform(0, 1, n), rng.uniform(-1, 1, n)]
    Y = np.c_[rng.uniform(1, 3, m), rng.uniform(-1.5, 1.5, m)]
    return X, Y


def solved_instance(n=20):
    mu, nu = interpolation.build_instance(n)
    matrix = build_cost_matrix(mu, nu, HALF)
    result = certify(solve_primal(matrix, mu, nu), matrix)
    xs, ys = support_pairs(result)
    phi = rockafellar_potential(xs, ys, HALF, 0, mu.points)
    return mu, nu, result, phi


def test_single_source_forward():
    x0 = np.array([0.0, 0.0])
    u = PotentialField([x0], [0.0])
    Y = np.array([[2.0, 1.0], [3.0, -2.0], [0.5, 2.0]])
    for t in (0.5, 1.0, 2.0):
        got = lax_forward(u, t, Y, HALF).values
        assert np.allclose(got, [cost_t(t, x0, y, HALF) for y in Y], rtol=0, atol=1e-15)


def test_single_target_backward():
    y0 = np.array([3.0, 1.0])
    u = PotentialField([y0], [2.5])
    X = np.array([[0.0, 0.0], [1.0, 2.0], [0.0, 5.0]])
    got = lax_backward(u, 0.7, X, HALF).values
    assert np.allclose(got[:2], [2.5 - cost_t(0.7, x, y0, HALF) for x in X[:2]])
    assert got[2] == -math.inf


def test_zero_time_is_identity_on_carrier(rng):
    X, _ = carriers(rng)
    u = PotentialField(X, rng.normal(size=len(X)))
    assert np.array_equal(lax_forward(u, 0.0, X, HALF).values, u.values)
    assert np.array_equal(lax_backward(u, 0.0, X, HALF).values, u.values)


def test_negative_time_rejected():
    u = PotentialField([[0, 0]], [0.0])
    for fn in (lax_forward, lax_backward, minimizing_sources):
        with pytest.raises(ValueError):
            fn(u, -1.0, [[1, 0]], HALF)


@settings(max_examples=80)
@given(st.integers(0, 2 ** 31), st.floats(0.05, 3.0), st.floats(0.1, 0.9))
def test_backward_forward_laws(seed, t, p):
    rng = np.random.default_rng(seed)
    params = CostParams(p)
    X, Y = carriers(rng)
    u = PotentialField(X, 3 * rng.normal(size=len(X)))
    back = lax_backward(lax_forward(u, t, Y, params), t, X, params).values
    assert np.all(back <= u.values + ROUNDING * (1 + np.abs(u.values)))
    v = PotentialField(Y, 3 * rng.normal(size=len(Y)))
    fwd = lax_forward(lax_backward(v, t, X, params), t, Y, params).values
    assert np.all(fwd >= v.values - ROUNDING * (1 + np.abs(v.values)))


@settings(max_examples=60)
@given(st.integers(0, 2 ** 31), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_semigroup_inequality_and_waypoint_equality(seed, s, t):
    rng = np.random.default_rng(seed)
    X = np.c_[rng.uniform(0, 1, 6), rng.uniform(-1, 1, 6)]
    Y = np.c_[rng.uniform(2, 3, 5), rng.uniform(-1, 1, 5)]
    Z = np.c_[rng.uniform(0.5, 2.5, 15), rng.uniform(-1.5, 1.5, 15)]
    u = PotentialField(X, rng.normal(size=6))
    full = lax_forward(u, t + s, Y, HALF).values
    two = lax_forward(lax_forward(u, s, Z, HALF), t, Y, HALF).values
    assert np.all(full <= two)
    waypoints = (X[:, None, :] + s / (t + s) * (Y[None, :, :] - X[:, None, :])).reshape(-1, 2)
    carried = lax_forward(lax_forward(u, s, np.r_[Z, waypoints], HALF), t, Y, HALF).values
    assert np.max(np.abs(full - carried)) <= 1e-10


@given(st.integers(0, 2 ** 31), st.floats(0.1, 2.0))
def test_forward_is_monotone(seed, t):
    rng = np.random.default_rng(seed)
    X, Y = carriers(rng)
    u = rng.normal(size=len(X))
    v = u + rng.uniform(0, 2, len(X))
    a = lax_forward(PotentialField(X, u), t, Y, HALF).values
    b = lax_forward(PotentialField(X, v), t, Y, HALF).values
    assert np.all(a <= b)


def test_minimizing_sources_agree_with_values(rng):
    X, Y = carriers(rng, 8, 6)
    u = PotentialField(X, rng.normal(size=8))
    idx = minimizing_sources(u, 1.0, Y, HALF)
    vals = lax_forward(u, 1.0, Y, HALF).values
    for j, i in enumerate(idx):
        assert vals[j] == pytest.approx(u.values[i] + cost_t(1.0, X[i], Y[j], HALF))


def test_displacement_interpolation_endpoints_and_errors():
    mu, nu, result, _ = solved_instance(12)
    dyn = DynamicalCoupling(result.coupling, HALF)
    a, b, pi = displacement_interpolate(dyn, 0.0, 1.0)
    assert a is mu and b is nu and pi is result.coupling
    for s, t in [(0.5, 0.5), (-0.1, 0.5), (0.2, 1.5), (0.7, 0.3)]:
        with pytest.raises(ValueError):
            displacement_interpolate(dyn, s, t)
    assert np.allclose(dyn.at(0.0), dyn.starts) and np.allclose(dyn.at(1.0), dyn.ends)


def test_dynamical_coupling_needs_causal_entries():
    mu, nu = DiscreteMeasure.dirac([0, 0]), DiscreteMeasure.dirac([0, 3])
    with pytest.raises(NotCausalError):
        DynamicalCoupling(Coupling(mu, nu, [0], [0], [1.0]), HALF)


@pytest.mark.parametrize("s, t", [(0.0, 0.5), (0.25, 0.75), (0.1, 0.9), (0.5, 1.0)])
def test_interpolated_cost_is_affine(s, t):
    mu, nu, result, _ = solved_instance(20)
    dyn = DynamicalCoupling(result.coupling, HALF)
    mu_s, mu_t, pi = displacement_interpolate(dyn, s, t)
    value = coupling_cost(pi, HALF, time=t - s)
    assert value == pytest.approx((t - s) * result.primal_value, abs=1e-10)
    lp = solve_primal(build_cost_matrix(mu_s, mu_t, HALF, time=t - s), mu_s, mu_t)
    assert lp.primal_value == pytest.approx(value, abs=1e-9)


def test_calibration_of_chain_pair_and_perturbation():
    mu, nu, result, phi = solved_instance(20)
    psi = c_transform(phi, nu.points, HALF)
    report = calibration_check(phi, psi, result.coupling, HALF)
    assert report.ok(1e-8)
    eps = 1e-3
    bumped = psi.values.copy()
    bumped[0] += eps
    report = calibration_check(phi, PotentialField(psi.points, bumped), result.coupling, HALF)
    assert report.subsolution_violation == pytest.approx(eps, abs=1e-12)
    assert not report.ok()
    assert report.to_json()["worst_pair"][1] == 0


def test_geodesic_calibration_residual():
    _, _, result, phi = solved_instance(20)
    dyn = DynamicalCoupling(result.coupling, HALF)
    assert geodesic_calibration_residual(phi, dyn, (0.0, 0.25, 0.5, 0.75, 1.0), HALF) <= 1e-10


def test_regularized_pair_calibrated():
    _, _, result, phi = solved_instance(20)
    dyn = DynamicalCoupling(result.coupling, HALF)
    _, _, pi = displacement_interpolate(dyn, 0.25, 0.75)
    pair = regularized_pair(phi, 0.25, 0.75, 0.1, params=HALF, coupling=pi)
    assert pair.report.calibration_residual <= 1e-6
    assert pair.report.subsolution_violation <= 1e-8
    assert pair.scale == pytest.approx(0.5 ** -0.5)
    # regularization never exceeds the forward evolution
    assert np.all(pair.raw_s.field.values <= pair.raw_s.unregularized.values + 1e-15)


@pytest.mark.parametrize("s, t, tau", [(0.0, 0.5, 0.1), (0.5, 0.5, 0.1), (0.25, 0.75, 0.3), (0.25, 0.75, 0.0)])
def test_regularized_pair_rejects_bad_times(s, t, tau):
    phi = PotentialField([[0, 0]], [0.0])
    with pytest.raises(ValueError):
        regularized_pair(phi, s, t, tau, [[1, 0]], [[2, 0]], HALF)


def test_single_source_regularization_is_exact():
    x0 = np.array([0.0, 0.0])
    phi = PotentialField([x0], [0.0])
    pts = np.array([[0.5, 0.1], [0.6, -0.2], [0.4, 0.0]])
    for tau in (0.2, 0.05, 0.001):
        reg = regularized_field(phi, 0.5, tau, pts, HALF)
        assert np.allclose(reg.field.values, reg.unregularized.values, atol=1e-12)
        assert np.allclose(reg.unregularized.values, [cost_t(0.5, x0, y, HALF) for y in pts])
    with pytest.raises(ValueError):
        regularized_field(phi, 0.0, 0.1, pts, HALF)
