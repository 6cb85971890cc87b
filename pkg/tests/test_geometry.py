import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chebfit.designs import GaussianDesign, OrthonormalDesign, RademacherDesign
from chebfit.geometry import (Containment, ball_in_hull_2d, ball_in_hull_sampled, convex_hull_2d,
                              estimate_containment_probability, support_function, symmetrized_cloud)


def sweep_inradius(P, k=10**5):
    """Angular sweep oracle: min over k equispaced directions of the support function."""
    t = np.linspace(0.0, 2 * np.pi, k, endpoint=False)
    V = np.column_stack([np.cos(t), np.sin(t)])
    return float(np.min(np.max(V @ P.T, axis=1)))


CROSS2 = np.sqrt(2) * np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])


def test_support_function_examples(rng):
    P = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    assert support_function(P, [1.0, 0.0]) == 1.0
    assert support_function(P, np.array([1.0, 1.0]) / np.sqrt(2)) == pytest.approx(1 / np.sqrt(2))
    Q = rng.standard_normal((30, 4))
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    assert support_function(Q, v) == max(float(q @ v) for q in Q)
    with pytest.raises(ValueError):
        support_function(P, [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        support_function(P, [2.0, 0.0])


def test_hull_of_square_with_interior_points():
    P = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.7]])
    H = convex_hull_2d(P)
    assert sorted(map(tuple, H)) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_cross_polytope_2d():
    v = ball_in_hull_2d(CROSS2, 1.0)
    assert v.contained is Containment.CERTIFIED
    assert v.inradius_estimate == pytest.approx(1.0, abs=1e-12)
    r = ball_in_hull_2d(CROSS2, 1.01)
    assert r.contained is Containment.REFUTED
    assert support_function(CROSS2, r.witness) < 1.01 - 1e-12


def test_collinear_cloud_is_refuted():
    P = np.array([[-1.0, -1.0], [0.0, 0.0], [2.0, 2.0]])
    v = ball_in_hull_2d(P, 0.1)
    assert v.contained is Containment.REFUTED and v.inradius_estimate == 0.0


def test_2d_matches_angular_sweep():
    rng = np.random.default_rng(1)
    for _ in range(20):
        P = rng.standard_normal((20, 2))
        r = ball_in_hull_2d(P, 0.1).inradius_estimate
        if r > 0:  # origin interior: inradius equals the min support
            assert r == pytest.approx(sweep_inradius(P), abs=1e-4)


def test_cross_polytope_sampled_3d():
    P = np.sqrt(3) * np.vstack([np.eye(3), -np.eye(3)])
    assert ball_in_hull_sampled(P, 0.9, seed=0).contained is not Containment.REFUTED
    v = ball_in_hull_sampled(P, 1.2, seed=0)
    assert v.contained is Containment.REFUTED
    assert support_function(P, v.witness) < 1.2 - 1e-12
    assert np.abs(np.abs(v.witness) - 1 / np.sqrt(3)).max() < 0.05


def test_sampled_consistent_with_exact_2d():
    rng = np.random.default_rng(2)
    for i in range(200):
        P = rng.standard_normal((int(rng.integers(5, 30)), 2))
        xi = float(rng.uniform(0.0, 1.0))
        exact = ball_in_hull_2d(P, xi)
        sampled = ball_in_hull_sampled(P, xi, directions=2000, seed=i)
        if sampled.contained is Containment.REFUTED:
            assert exact.inradius_estimate < xi
            assert support_function(P, sampled.witness) < xi - 1e-12
        if i < 100 and exact.contained is Containment.REFUTED and exact.inradius_estimate < xi - 1e-3:
            assert sampled.contained is Containment.REFUTED


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_monotone_in_xi_and_points(seed, frac):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((15, 2))
    r = ball_in_hull_2d(P, 0.0).inradius_estimate
    if r <= 0:
        return
    assert ball_in_hull_2d(P, r).contained is Containment.CERTIFIED
    assert ball_in_hull_2d(P, frac * r).contained is Containment.CERTIFIED
    Q = np.vstack([P, rng.standard_normal((3, 2))])
    assert ball_in_hull_2d(Q, r).contained is Containment.CERTIFIED


def test_orthonormal_design_containment_probability():
    gamma, p = 0.1, 2
    m = int(np.ceil(2 * p * np.log(2 * p / gamma)))
    est = estimate_containment_probability(OrthonormalDesign.standard(p), m, 1.0, 400, seed=3)
    assert est.exact
    assert est.probability <= gamma + 3 * est.std_error


def test_zero_radius_rarely_fails():
    est = estimate_containment_probability(GaussianDesign.identity(2), 50, 0.0, 100, seed=4)
    assert est.probability == 0.0


def test_gaussian_containment_below_bound():
    from chebfit.theory import containment_constants, containment_prob_bound
    d = GaussianDesign.identity(2)
    c = containment_constants(d)
    est = estimate_containment_probability(d, 400, c.xi, 200, seed=5)
    assert est.probability <= containment_prob_bound(c.xi, c.rho, c.upsilon, 2, 400) + 3 * est.std_error


def test_sampled_trials_flagged_inexact():
    est = estimate_containment_probability(RademacherDesign(3), 20, 0.5, 5, seed=6, directions=500)
    assert not est.exact and 0.0 <= est.probability <= 1.0


def test_symmetrized_cloud_deterministic():
    a = symmetrized_cloud(GaussianDesign.identity(2), 10, 7, (1,))
    b = symmetrized_cloud(GaussianDesign.identity(2), 10, 7, (1,))
    assert a.tobytes() == b.tobytes()
