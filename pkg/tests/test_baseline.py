import math

import numpy as np
import pytest

from dissimpi import (
    DimensionMismatch,
    LinearModel,
    RankDeficient,
    fit_least_squares,
    fit_quantile_regression,
    pinball_objective,
    predict_linear,
)


def brute_force_intercept(y, tau):
    """Best pinball objective over constant predictors; the optimum sits at a data point."""
    return min(pinball_objective(y - b, tau=tau) for b in y)


@pytest.mark.parametrize("tau", [0.05, 0.1, 0.5, 0.9])
def test_intercept_only_matches_breakpoints(tau):
    rng = np.random.default_rng(int(tau * 100))
    y = rng.normal(size=57)
    model = fit_quantile_regression(np.zeros((57, 0)), y, tau)
    assert pinball_objective(y - model.theta[0], tau=tau) == pytest.approx(brute_force_intercept(y, tau), abs=1e-9)


def test_intercept_only_quantile_of_integers():
    y = np.arange(1.0, 101.0)
    model = fit_quantile_regression(np.zeros((100, 0)), y, 0.9)
    assert 90.0 <= model.theta[0] <= 91.0
    assert pinball_objective(y - model.theta[0], tau=0.9) == pytest.approx(pinball_objective(y - 90.0, tau=0.9))


def test_exact_line_fit():
    x = np.linspace(-3, 3, 21)
    model = fit_quantile_regression(x[:, None], 2 * x + 1, 0.5)
    np.testing.assert_allclose(model.theta, [2.0, 1.0], atol=1e-9)


def test_count_condition_small_tau():
    rng = np.random.default_rng(1)
    for tau in (0.02, 0.05, 0.1):
        X = rng.normal(size=(80, 2))
        y = X @ [0.5, -1.0] + rng.standard_t(3, size=80)
        model = fit_quantile_regression(X, y, tau)
        below = np.sum(y < predict_linear(model, X) - 1e-9)
        assert below <= math.ceil(tau * 80)


def test_subgradient_certificate():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 2))
    y = X @ [1.0, 2.0] + rng.normal(size=60)
    for tau in (0.1, 0.5, 0.9):
        model = fit_quantile_regression(X, y, tau)
        base = pinball_objective(model, X, y)
        for j in range(3):
            for s in (1e-6, -1e-6):
                theta = model.theta.copy()
                theta[j] += s
                assert pinball_objective(LinearModel(theta, tau), X, y) >= base - 1e-9


def test_quantile_band_ordering():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(200, 2))
    y = X @ [1.0, -0.5] + 0.2 * rng.normal(size=200)
    lo = predict_linear(fit_quantile_regression(X, y, 0.1), X)
    hi = predict_linear(fit_quantile_regression(X, y, 0.9), X)
    assert np.mean(hi >= lo) >= 0.95


def test_least_squares():
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(fit_least_squares(x[:, None], 3 * x - 2).theta, [3, -2], atol=1e-10)
    np.testing.assert_allclose(fit_least_squares(x[:, None], np.full(11, 1.7)).theta, [0, 1.7], atol=1e-12)
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    model = fit_least_squares(X, y)
    A = np.column_stack([X, np.ones(40)])
    np.testing.assert_allclose(A.T @ (y - A @ model.theta), 0, atol=1e-8)


def test_predict_linear():
    assert predict_linear(LinearModel([0, 0, 2.5]), [7.0, -1.0]) == 2.5
    assert predict_linear(LinearModel([1.0, 0.0]), [5.0]) == 5.0
    assert predict_linear(LinearModel([2.0, 1.0]), [3.0]) == 7.0
    np.testing.assert_allclose(predict_linear(LinearModel([2.0, 1.0]), np.array([[0.0], [1.0]])), [1, 3])
    with pytest.raises(DimensionMismatch):
        predict_linear(LinearModel([2.0, 1.0]), [3.0, 4.0])


def test_rank_deficient():
    X = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(RankDeficient):
        fit_quantile_regression(X, np.arange(5.0), 0.5)
    with pytest.raises(RankDeficient):
        fit_least_squares(np.ones((5, 1)), np.arange(5.0))
