import numpy as np
import pytest

from dissimpi import (
    DegeneratePointSet,
    DimensionMismatch,
    NonConvergence,
    PointSet,
    SolverSettings,
    closed_form_gamma0,
    dissimilarities,
    dual_objective,
    grid_dissimilarities,
    solve_dissimilarity,
)
from dissimpi.dissim import inner_minimizer, line_dissimilarities


def brute_force_line(z, Z, gamma, step=1e-4):
    """Minimize over the one-dimensional feasible set when N = n + 2."""
    N, n = Z.shape
    E = np.vstack([Z.T, np.ones(N)])
    rhs = np.append(z, 1.0)
    lam0 = np.linalg.lstsq(E, rhs, rcond=None)[0]
    v = np.linalg.svd(E)[2][-1]

    def f(t):
        lam = lam0[:, None] + v[:, None] * t[None, :]
        return np.sum(lam**2, axis=0) + gamma * np.sum(np.abs(lam), axis=0)

    radius = np.linalg.norm(lam0) + np.sqrt(f(np.zeros(1))[0]) + 1.0
    t = np.arange(-radius, radius + step, step)
    return float(f(t).min())


def test_two_point_examples():
    D = PointSet([[0.0], [1.0]])
    r = solve_dissimilarity([0.5], D, 0.0)
    assert r.value == pytest.approx(0.5, abs=1e-10)
    np.testing.assert_allclose(r.lam, [0.5, 0.5], atol=1e-9)
    r = solve_dissimilarity([1.0], D, 1.0)
    assert r.value == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(r.lam, [0.0, 1.0], atol=1e-9)


def test_closed_form_examples():
    D = PointSet([[0.0], [1.0]])
    assert closed_form_gamma0([0.5], D) == pytest.approx(0.5)
    assert closed_form_gamma0([1.0], D) == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    D = PointSet(rng.normal(size=(13, 3)))
    assert closed_form_gamma0(D.mean, D) == pytest.approx(1 / 13, rel=1e-14)


def test_inner_minimizer():
    assert inner_minimizer(3.0, 1.0, 1.0) == pytest.approx(-1.0)
    assert inner_minimizer(0.5, 1.0, 1.0) == 0.0
    assert inner_minimizer(-3.0, 1.0, 1.0) == pytest.approx(1.0)
    # stationarity on a fine grid for a weighted case
    lam = np.linspace(-3, 3, 600001)
    obj = 2.5 * lam**2 + 0.7 * np.abs(lam) + 4.0 * lam
    assert inner_minimizer(4.0, 0.7, 2.5) == pytest.approx(lam[np.argmin(obj)], abs=1e-5)


@pytest.mark.parametrize("gamma", [0.0, 0.4, 2.0])
def test_mean_attains_lower_bound(gamma):
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(25, 2))
    D = PointSet(Z)
    r = solve_dissimilarity(Z.mean(axis=0), D, gamma)
    assert r.value == pytest.approx(1 / 25 + gamma, abs=1e-9)
    np.testing.assert_allclose(r.lam, np.full(25, 1 / 25), atol=1e-8)


def test_brute_force_small_instances():
    rng = np.random.default_rng(3)
    for trial in range(12):
        n = 1 + trial % 3
        Z = rng.normal(size=(n + 2, n))
        z = rng.normal(size=n)
        gamma = [0.0, 0.5, 2.0][trial % 3]
        D = PointSet(Z)
        assert solve_dissimilarity(z, D, gamma).value == pytest.approx(brute_force_line(z, Z, gamma), abs=1e-3)


def test_duality_and_residual():
    rng = np.random.default_rng(4)
    settings = SolverSettings()
    for _ in range(30):
        n = rng.integers(1, 4)
        Z = rng.normal(size=(rng.integers(n + 2, 40), n))
        D = PointSet(Z)
        z = 2 * rng.normal(size=n)
        gamma = rng.uniform(0, 3)
        r = solve_dissimilarity(z, D, gamma, settings)
        assert r.primal_residual <= settings.primal_tolerance
        assert r.dual_value <= r.value + 1e-9
        assert dual_objective(z, D, gamma, r.dual_mu, r.dual_nu) == pytest.approx(r.dual_value)
        assert r.value >= 1 / len(D) + gamma - 1e-9
        assert abs(r.lam.sum() - 1) <= 1e-8
        np.testing.assert_allclose(r.lam @ Z, z, atol=1e-6 * (1 + np.abs(z).max()) * np.abs(Z).max())


def test_value_matches_weights():
    rng = np.random.default_rng(5)
    Z = rng.normal(size=(20, 2))
    w = rng.uniform(0.5, 2.0, size=20)
    D = PointSet(Z, weights=w)
    r = solve_dissimilarity([0.3, -1.2], D, 0.8)
    assert r.value == pytest.approx(np.sum(w * r.lam**2) + 0.8 * np.abs(r.lam).sum(), rel=1e-9)


def test_monotone_in_gamma():
    rng = np.random.default_rng(6)
    D = PointSet(rng.normal(size=(30, 2)))
    z = np.array([1.5, -0.5])
    vals = [solve_dissimilarity(z, D, g).value for g in (0.0, 0.1, 0.5, 1.0, 3.0)]
    assert np.all(np.diff(vals) >= -1e-9)


def test_batch_matches_single_point_solver():
    rng = np.random.default_rng(7)
    Z = rng.normal(size=(40, 3))
    D = PointSet(Z)
    pts = rng.normal(size=(25, 3)) * 1.5
    for gamma in (0.0, 0.7):
        batch = dissimilarities(pts, D, gamma)
        single = [solve_dissimilarity(p, D, gamma).value for p in pts]
        np.testing.assert_allclose(batch, single, rtol=1e-7)


def test_grid_dissimilarities_layout():
    rng = np.random.default_rng(8)
    Z = rng.normal(size=(30, 3))
    D = PointSet(Z)
    X = rng.normal(size=(4, 2))
    ys = np.linspace(-2, 2, 9)
    G = grid_dissimilarities(X, D, ys, 0.5, chunk=3)
    assert G.shape == (4, 9)
    for k in range(4):
        np.testing.assert_allclose(G[k], line_dissimilarities(X[k], D, ys, 0.5), rtol=1e-9)
        expected = [solve_dissimilarity(np.r_[y, X[k]], D, 0.5).value for y in ys]
        np.testing.assert_allclose(G[k], expected, rtol=1e-7)


def test_invalid_point_sets():
    with pytest.raises(DegeneratePointSet):
        PointSet([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(DegeneratePointSet):
        PointSet([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    with pytest.raises(DegeneratePointSet):
        PointSet([[0.0], [1.0]], weights=[1.0, 0.0])
    with pytest.raises(DegeneratePointSet):
        PointSet([[0.0], [np.nan]])


def test_dimension_mismatch_and_budget():
    rng = np.random.default_rng(9)
    D = PointSet(rng.normal(size=(10, 2)))
    with pytest.raises(DimensionMismatch):
        solve_dissimilarity([1.0, 2.0, 3.0], D, 0.0)
    with pytest.raises(NonConvergence):
        solve_dissimilarity([5.0, -4.0], D, 1.0, SolverSettings(primal_tolerance=1e-14, max_iterations=2))
    with pytest.raises(ValueError):
        solve_dissimilarity([0.0, 0.0], D, -1.0)


def test_point_set_is_read_only():
    D = PointSet(np.arange(6.0).reshape(3, 2) ** 2)
    with pytest.raises(ValueError):
        D.points[0, 0] = 1.0
