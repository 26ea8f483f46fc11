"""Linear baselines: quantile regression and ordinary least squares."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatch, NonConvergence, RankDeficient


@dataclass(frozen=True)
class LinearModel:
    """Affine predictor ``theta[:-1] @ x + theta[-1]`` when ``intercept`` is set.

    Without an intercept the prediction is ``theta @ x``.
    """

    theta: np.ndarray
    tau: Optional[float] = None
    intercept: bool = True

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ValueError("coefficients must be finite")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def n_features(self) -> int:
        return self.theta.shape[0] - int(self.intercept)


def _design(X, y, intercept: bool):
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X must have one row per output")
    if intercept:
        X = np.column_stack([X, np.ones(X.shape[0])])
    if X.shape[1] == 0 or np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficient("design matrix does not have full column rank")
    return X, y


def pinball_objective(residual_or_model, X=None, y=None, tau=None) -> float:
    """Sum of ``(1 - tau) max(0, -e) + tau max(0, e)`` over residuals ``e = y - prediction``.

    Accepts either a residual vector plus ``tau`` or a model plus data.
    """
    if isinstance(residual_or_model, LinearModel):
        model = residual_or_model
        tau = model.tau if tau is None else tau
        e = np.asarray(y, dtype=float).reshape(-1) - predict_linear(model, X)
    else:
        e = np.asarray(residual_or_model, dtype=float)
    if tau is None:
        raise ValueError("tau is required")
    return float(np.sum(np.where(e > 0, tau * e, (tau - 1.0) * e)))


def _polish(A, y, tau, theta):
    """Move to a basic solution interpolating ``p`` data points if that is no worse.

    Some LP optimum is always attained at such a vertex; snapping removes the
    solver's feasibility rounding from the coefficients.
    """
    p = A.shape[1]
    order = np.argsort(np.abs(y - A @ theta), kind="stable")
    rows = []
    for i in order:
        trial = rows + [i]
        if np.linalg.matrix_rank(A[trial]) == len(trial):
            rows = trial
            if len(rows) == p:
                break
    if len(rows) < p:
        return theta
    vertex = np.linalg.solve(A[rows], y[rows])
    if pinball_objective(y - A @ vertex, tau=tau) <= pinball_objective(y - A @ theta, tau=tau):
        return vertex
    return theta


def fit_quantile_regression(X, y, tau, intercept: bool = True) -> LinearModel:
    """Minimize the pinball loss exactly through its linear-programming form.

    ``X`` may have zero columns, giving an intercept-only fit.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    A, y = _design(X, y, intercept)
    N, p = A.shape
    # y - A theta = u - v with u, v >= 0
    cost = np.concatenate([np.zeros(p), np.full(N, tau), np.full(N, 1.0 - tau)])
    A_eq = np.hstack([A, np.eye(N), -np.eye(N)])
    bounds = [(None, None)] * p + [(0, None)] * (2 * N)
    sol = linprog(cost, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs")
    if sol.status != 0 or sol.x is None:
        raise NonConvergence(f"quantile regression LP failed: {sol.message}")
    theta = _polish(A, y, tau, sol.x[:p])
    return LinearModel(theta, float(tau), intercept)


def fit_least_squares(X, y, intercept: bool = True) -> LinearModel:
    A, y = _design(X, y, intercept)
    theta, *_ = np.linalg.lstsq(A, y, rcond=None)
    return LinearModel(theta, None, intercept)


def predict_linear(model: LinearModel, X) -> np.ndarray:
    """Predictions for one regressor (returns a float) or a stack of them (rows)."""
    X = np.asarray(X, dtype=float)
    single = X.ndim <= 1
    X2 = X.reshape(1, -1) if single else X
    if model.n_features == 0 and X2.size == 0:
        X2 = np.zeros((X2.shape[0], 0))
    if X2.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {X2.shape[1]}")
    out = X2 @ model.theta[: model.n_features]
    if model.intercept:
        out = out + model.theta[-1]
    return float(out[0]) if single else out
