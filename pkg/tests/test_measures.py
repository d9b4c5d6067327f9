import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorentzot.measures import (
    Ball,
    Coupling,
    DiracMixture,
    DiscreteMeasure,
    MeasureError,
    RoundedRectangle,
    Segment,
    figure4_map,
    marginals,
    merge_points,
    pushforward,
    sample,
)


def test_dirac_mixture_atoms():
    mu = sample(DiracMixture([[2, -2], [5, 3]], [0.5, 0.5]))
    assert len(mu) == 2
    assert np.array_equal(mu.weights, [0.5, 0.5])
    assert np.array_equal(mu.points, [[2, -2], [5, 3]])


def test_segment_grid_midpoints():
    mu = sample(Segment((0, -4), (0, 4)), 8)
    assert np.allclose(mu.points[:, 1], np.arange(-3.5, 4, 1.0))
    assert np.all(mu.points[:, 0] == 0)
    assert np.allclose(mu.weights, 1 / 8)


@pytest.mark.parametrize(
    "density, n",
    [
        (Segment((0, -1), (0, 1)), 17),
        (Ball((0, 0), 0.5), 40),
        (Ball((0, 0, 0), 0.5), 40),
        (RoundedRectangle(), 100),
    ],
)
@pytest.mark.parametrize("mode", ["grid", "random"])
def test_sampling_is_deterministic(density, n, mode):
    a = sample(density, n, seed=3, mode=mode)
    b = sample(density, n, seed=3, mode=mode)
    assert a.points.tobytes() == b.points.tobytes()
    assert len(a) == n
    assert a.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_random_seeds_differ():
    a = sample(Segment((0, -1), (0, 1)), 10, seed=1, mode="random")
    b = sample(Segment((0, -1), (0, 1)), 10, seed=2, mode="random")
    assert not np.array_equal(a.points, b.points)


def test_ball_samples_inside():
    mu = sample(Ball((1, 2), 0.3), 200)
    assert np.all(np.linalg.norm(mu.points - [1, 2], axis=1) <= 0.3 + 1e-12)


def test_rounded_rectangle_geometry():
    dens = RoundedRectangle()
    mu = sample(dens, 400)
    u, w = dens.to_frame(mu.points)
    _, _, _, length = dens.frame
    assert np.all((u >= 0) & (u <= length) & (w >= 0) & (w <= dens.thickness))
    assert dens.right_region_mass() > 0.5
    # the frame map inverts to_spacetime
    uu, ww = dens.to_frame(dens.to_spacetime(np.array([0.3, 2.0]), np.array([0.1, 0.7])))
    assert np.allclose(uu, [0.3, 2.0]) and np.allclose(ww, [0.1, 0.7])


@pytest.mark.parametrize("n, mode", [(0, "grid"), (5, "sobol")])
def test_sample_rejects_bad_arguments(n, mode):
    with pytest.raises(MeasureError):
        sample(Segment((0, 0), (0, 1)), n, mode=mode)


def test_sample_rejects_unknown_density():
    with pytest.raises(MeasureError):
        sample("ball", 3)


@pytest.mark.parametrize(
    "points, weights",
    [
        ([[0, 0], [1, 0]], [0.5, 0.6]),
        ([[0, 0], [1, 0]], [1.0, 0.0]),
        ([[0, 0], [1, 0]], [1.0]),
        ([[0, 0], [0, 1e-12]], [0.5, 0.5]),
        ([[0, np.nan]], [1.0]),
        ([[0]], [1.0]),
    ],
)
def test_measure_validation(points, weights):
    with pytest.raises(MeasureError):
        DiscreteMeasure(np.asarray(points, dtype=float), weights)


def test_measure_json_round_trip():
    mu = DiscreteMeasure([[0, 0, 1], [1, 2, 3]], [0.25, 0.75])
    back = DiscreteMeasure.from_json(mu.to_json())
    assert np.array_equal(back.points, mu.points)
    assert np.array_equal(back.weights, mu.weights)
    with pytest.raises(MeasureError):
        DiscreteMeasure.from_json({**mu.to_json(), "colour": "red"})
    with pytest.raises(MeasureError):
        DiscreteMeasure.from_json({**mu.to_json(), "dimension": 1})


@pytest.mark.parametrize("x, expected", [(-2.0, [1, -3]), (-0.5, [2, -2.5]), (-1.0, [1, -2]), (0.0, [1, 0]),
                                         (1.5, [1, 1.5])])
def test_figure4_map(x, expected):
    assert np.allclose(figure4_map([0, x]), expected)


def test_pushforward_identity_and_merge():
    mu = sample(Segment((0, -4), (0, 4)), 8)
    same = pushforward(mu, lambda p: p)
    assert np.array_equal(same.points, mu.points)
    assert np.array_equal(same.weights, mu.weights)
    collapsed = pushforward(mu, lambda p: [1.0, 0.0])
    assert len(collapsed) == 1 and collapsed.weights[0] == pytest.approx(1.0)


def test_pushforward_figure4():
    mu = sample(Segment((0, -4), (0, 4)), 16)
    nu = pushforward(mu, figure4_map)
    assert len(nu) == 16
    assert np.allclose(np.sort(nu.points[:, 1]), np.sort([figure4_map(p)[1] for p in mu.points]))


def test_merge_points_adds_weights():
    pts, w, inverse = merge_points(np.array([[0, 0], [0, 1e-12], [1, 1]]), np.array([0.2, 0.3, 0.5]))
    assert len(pts) == 2
    assert np.allclose(sorted(w), [0.5, 0.5])
    assert inverse[0] == inverse[1] != inverse[2]


def test_product_coupling_marginals():
    mu = DiscreteMeasure([[0, 0], [0, 1], [0, 2]], [0.2, 0.3, 0.5])
    nu = DiscreteMeasure([[5, 0], [5, 1]], [0.4, 0.6])
    pi = Coupling.product(mu, nu)
    pi.check()
    a, b = marginals(pi)
    assert np.allclose(a.weights, mu.weights) and np.allclose(b.weights, nu.weights)
    assert pi.is_causal() and pi.is_strictly_timelike()


def test_single_entry_coupling():
    mu, nu = DiscreteMeasure.dirac([0, 0]), DiscreteMeasure.dirac([1, 1])
    pi = Coupling(mu, nu, [0], [0], [1.0])
    a, b = marginals(pi)
    assert np.array_equal(a.points, mu.points) and np.array_equal(b.points, nu.points)
    assert pi.is_causal() and not pi.is_strictly_timelike()


def test_perturbed_coupling_fails_check(rng):
    mu = DiscreteMeasure.uniform(rng.uniform(0, 1, (4, 2)))
    nu = DiscreteMeasure.uniform(rng.uniform(5, 6, (3, 2)))
    pi = Coupling.product(mu, nu)
    mass = pi.mass.copy()
    mass[rng.integers(len(mass))] += 1e-3
    with pytest.raises(MeasureError):
        Coupling(mu, nu, pi.rows, pi.cols, mass).check()
    with pytest.raises(MeasureError):
        Coupling(mu, nu, pi.rows, pi.cols, -pi.mass).check()
    with pytest.raises(MeasureError):
        Coupling(mu, nu, pi.rows + 10, pi.cols, pi.mass).check()


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6))
def test_product_marginal_error_is_tiny(a, b):
    a = np.array(a) / np.sum(a)
    b = np.array(b) / np.sum(b)
    a[-1] = 1.0 - a[:-1].sum()
    b[-1] = 1.0 - b[:-1].sum()
    mu = DiscreteMeasure(np.c_[np.zeros(len(a)), np.arange(len(a))], a)
    nu = DiscreteMeasure(np.c_[np.full(len(b), 10.0), np.arange(len(b))], b)
    assert Coupling.product(mu, nu).marginal_error() <= 1e-12
