"""Dissimilarity between a point and a stored data set.

The dissimilarity of ``z`` with respect to points ``z_1..z_N`` is the optimal
value of the strictly convex program

    min  sum_i w_i lam_i**2 + gamma * sum_i |lam_i|
    s.t. sum_i lam_i z_i = z,   sum_i lam_i = 1.

The program is solved in its dual, which has only ``n + 1`` variables: once
the multipliers are fixed the primal weights follow from a soft threshold.
Data are standardized internally (centered and whitened); the optimal value is
invariant under this affine change of coordinates.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from . import _kernels
from .errors import DegeneratePointSet, DimensionMismatch, NonConvergence, SingularMatrix


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances for the dual solvers.

    ``primal_tolerance`` bounds ``max(|Z lam - z|_inf, |sum(lam) - 1|)`` in
    standardized coordinates.  ``max_iterations`` caps the accelerated
    gradient iterations of :func:`solve_dissimilarity`; ``newton_max_iterations``
    caps the Newton iterations per query of the batch routines.
    """

    primal_tolerance: float = 1e-8
    max_iterations: int = 50_000
    newton_max_iterations: int = 200
    power_iterations: int = 50

    def __post_init__(self):
        if not self.primal_tolerance > 0:
            raise ValueError("primal_tolerance must be positive")
        if self.max_iterations < 1 or self.newton_max_iterations < 1:
            raise ValueError("iteration limits must be at least 1")
        if self.power_iterations < 1:
            raise ValueError("power_iterations must be at least 1")


@dataclass(frozen=True)
class DissimilarityResult:
    value: float
    lam: np.ndarray
    dual_mu: np.ndarray
    dual_nu: float
    primal_residual: float
    iterations: int
    dual_value: float


class PointSet:
    """Immutable collection of ``N`` stored points in ``R^n``.

    Parameters
    ----------
    points : array-like of shape (N, n)
        One stored point per row (a 1-D array is read as ``n = 1``).
    weights : array-like of shape (N,), optional
        Positive weights of the quadratic term, all ones by default.

    Raises
    ------
    DegeneratePointSet
        If ``N < n + 1``, a weight is not positive, a value is not finite, or
        the points do not affinely span ``R^n``.
    """

    def __init__(self, points, weights=None, settings: Optional[SolverSettings] = None):
        Z = np.array(points, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.ndim != 2:
            raise DegeneratePointSet("points must be a 2-D array (one point per row)")
        N, n = Z.shape
        if n < 1:
            raise DegeneratePointSet("points must have at least one coordinate")
        if N < n + 1:
            raise DegeneratePointSet(f"need at least n + 1 = {n + 1} points, got {N}")
        if not np.all(np.isfinite(Z)):
            raise DegeneratePointSet("points contain non-finite values")
        if weights is None:
            w = np.ones(N)
        else:
            w = np.array(weights, dtype=float).reshape(-1)
            if w.shape != (N,):
                raise DegeneratePointSet(f"expected {N} weights, got {w.shape[0]}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise DegeneratePointSet("weights must be finite and strictly positive")

        ext = np.column_stack([Z, np.ones(N)])
        if np.linalg.matrix_rank(ext) < n + 1:
            raise DegeneratePointSet("points do not affinely span the space")
        mean = Z.mean(axis=0)
        centered = Z - mean
        try:
            chol = np.linalg.cholesky(centered.T @ centered / N)
        except np.linalg.LinAlgError as exc:
            raise DegeneratePointSet("empirical covariance is not positive definite") from exc

        std = solve_triangular(chol, centered.T, lower=True).T
        A = np.ascontiguousarray(np.column_stack([std, np.ones(N)]))
        gram = A.T @ A
        settings = settings or SolverSettings()
        # power iteration on the constraint Gram matrix; after whitening it is
        # N * I up to rounding, so the estimate is essentially exact
        v = np.ones(n + 1) / np.sqrt(n + 1)
        for _ in range(settings.power_iterations):
            v = gram @ v
            v /= np.linalg.norm(v)
        top = float(v @ gram @ v)

        self._points = Z
        self._weights = w
        self._mean = mean
        self._chol = chol
        self._A = A
        self._gram_inv = np.linalg.inv(gram)
        self._lipschitz = top / (2.0 * w.min())
        self._marginal = None
        for arr in (Z, w, mean, chol, A, self._gram_inv):
            arr.flags.writeable = False

    @classmethod
    def from_pairs(cls, X, y, weights=None):
        """Stack regressor/output pairs into points ``[y_i, x_i]``."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch("X and y have different numbers of rows")
        return cls(np.column_stack([y, X]), weights)

    def __len__(self):
        return self._points.shape[0]

    def __repr__(self):
        return f"PointSet(N={len(self)}, n={self.dim})"

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self._mean

    @property
    def unit_weights(self) -> bool:
        return bool(np.all(self._weights == 1.0))

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of the dual gradient in standardized coordinates."""
        return self._lipschitz

    def standardize(self, z) -> np.ndarray:
        """Map points (rows) to the whitened coordinates used by the solvers."""
        z = np.asarray(z, dtype=float)
        flat = z.ndim == 1
        zz = np.atleast_2d(z)
        if zz.shape[1] != self.dim:
            raise DimensionMismatch(f"expected points of dimension {self.dim}, got {zz.shape[1]}")
        out = solve_triangular(self._chol, (zz - self._mean).T, lower=True).T
        return out[0] if flat else np.ascontiguousarray(out)

    def marginal(self) -> "PointSet":
        """The point set without its first coordinate (the regressor part of ``[y; x]``)."""
        if self.dim < 2:
            raise DimensionMismatch("a 1-D point set has no regressor part")
        if self._marginal is None:
            self._marginal = PointSet(self._points[:, 1:], self._weights)
        return self._marginal


def inner_minimizer(c, gamma, w=1.0):
    """Minimizer over ``lam`` of ``w lam**2 + gamma |lam| + c lam``.

    This is the soft threshold ``-sign(c) * max(|c| - gamma, 0) / (2 w)``; it
    accepts scalars or arrays.
    """
    c = np.asarray(c, dtype=float)
    out = -np.sign(c) * np.maximum(np.abs(c) - gamma, 0.0) / (2.0 * np.asarray(w, dtype=float))
    return float(out) if out.ndim == 0 else out


def _check_query(z, D: PointSet) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (D.dim,):
        raise DimensionMismatch(f"expected a point of dimension {D.dim}, got {z.shape[0]}")
    return z


def _check_gamma(gamma) -> float:
    gamma = float(gamma)
    if not (gamma >= 0 and np.isfinite(gamma)):
        raise ValueError(f"gamma must be a finite nonnegative number, got {gamma}")
    return gamma


def dual_objective(z, D: PointSet, gamma, mu, nu) -> float:
    """Dual function evaluated at multipliers ``(mu, nu)`` in original coordinates."""
    z = _check_query(z, D)
    gamma = _check_gamma(gamma)
    c = D.points @ np.asarray(mu, dtype=float) + float(nu)
    lam = inner_minimizer(c, gamma, D.weights)
    inner = np.sum(D.weights * lam**2 + gamma * np.abs(lam) + c * lam)
    return float(inner - np.dot(mu, z) - nu)


def solve_dissimilarity(z, D: PointSet, gamma, settings: Optional[SolverSettings] = None) -> DissimilarityResult:
    """Solve the dissimilarity program for one query point.

    Uses accelerated gradient ascent on the dual (step ``1/L``, momentum with
    adaptive restart).  On exit the weights are projected onto the equality
    constraints, so ``value`` is attained by a feasible point and ``dual_value``
    certifies a lower bound.

    Raises
    ------
    NonConvergence
        If the residual tolerance is not met within ``max_iterations``.
    DimensionMismatch
        If ``z`` does not have the dimension of ``D``.
    """
    settings = settings or SolverSettings()
    z = _check_query(z, D)
    gamma = _check_gamma(gamma)
    b = np.append(D.standardize(z), 1.0)
    eta, lam, value, residual, raw, iterations, status = _kernels.agd_solve(
        D._A, D.weights, b, gamma, D.lipschitz, settings.primal_tolerance,
        settings.max_iterations, np.zeros(D.dim + 1), D._gram_inv,
    )
    if status != _kernels.CONVERGED:
        raise NonConvergence(
            f"dual gradient ascent stopped after {iterations} iterations with "
            f"residual {raw:.3e} > {settings.primal_tolerance:.1e}"
        )
    # multipliers of the standardized constraints -> original constraints
    mu = solve_triangular(D._chol, eta[:-1], lower=True, trans="T")
    nu = float(eta[-1] - mu @ D.mean)
    return DissimilarityResult(
        value=float(value),
        lam=lam,
        dual_mu=mu,
        dual_nu=nu,
        primal_residual=float(residual),
        iterations=int(iterations),
        dual_value=dual_objective(z, D, gamma, mu, nu),
    )


def closed_form_gamma0(z, D: PointSet) -> float:
    """Explicit dissimilarity at ``gamma = 0`` for unit weights.

    ``1/N + (z - zbar)' (Z Z' - N zbar zbar')^{-1} (z - zbar)``, evaluated with a
    Cholesky factorization of the centered scatter matrix.
    """
    if not D.unit_weights:
        raise ValueError("the closed form holds for unit weights only")
    z = _check_query(z, D)
    N = len(D)
    centered = D.points - D.mean
    try:
        factor = cho_factor(centered.T @ centered, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("scatter matrix is not positive definite") from exc
    d = z - D.mean
    return float(1.0 / N + d @ cho_solve(factor, d))


def _sweep(Q, restart, D: PointSet, gamma, settings):
    values, residuals, _, status = _kernels.newton_sweep(
        D._A, D.weights, Q, restart, gamma, D.lipschitz,
        settings.primal_tolerance, settings.newton_max_iterations, D._gram_inv,
    )
    failed = int(np.count_nonzero(status != _kernels.CONVERGED))
    if failed:
        raise NonConvergence(
            f"{failed} of {len(status)} queries did not reach residual "
            f"{settings.primal_tolerance:.1e} (worst {residuals.max():.3e})"
        )
    return values


def dissimilarities(points, D: PointSet, gamma, settings: Optional[SolverSettings] = None) -> np.ndarray:
    """Dissimilarity of every row of ``points``.

    Solved by a semismooth Newton method on the same dual, warm started from
    the previous row; ordering nearby points consecutively makes it cheap.
    """
    settings = settings or SolverSettings()
    gamma = _check_gamma(gamma)
    Q = D.standardize(np.atleast_2d(np.asarray(points, dtype=float)))
    restart = np.zeros(Q.shape[0], dtype=np.bool_)
    return _sweep(Q, restart, D, gamma, settings)


def grid_dissimilarities(X, D: PointSet, ys, gamma, settings: Optional[SolverSettings] = None,
                         chunk: int = 64) -> np.ndarray:
    """Dissimilarities of ``[ys[j], X[k]]`` for all regressors ``X[k]`` and outputs ``ys[j]``.

    Returns an array of shape ``(len(X), len(ys))``.  Each row is one sweep
    along the output axis; ``ys`` should be sorted for the warm starts to pay off.
    """
    settings = settings or SolverSettings()
    gamma = _check_gamma(gamma)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != D.dim - 1:
        raise DimensionMismatch(f"regressors must have dimension {D.dim - 1}, got {X.shape[1]}")
    ys = np.asarray(ys, dtype=float).reshape(-1)
    K, M = X.shape[0], ys.shape[0]
    base = D.standardize(np.column_stack([np.zeros(K), X]))
    unit = np.zeros(D.dim)
    unit[0] = 1.0
    direction = solve_triangular(D._chol, unit, lower=True)
    out = np.empty((K, M))
    restart = np.zeros(M * min(chunk, K), dtype=np.bool_)
    restart[::M] = True
    for start in range(0, K, chunk):
        stop = min(start + chunk, K)
        Q = base[start:stop, None, :] + ys[None, :, None] * direction
        Q = np.ascontiguousarray(Q.reshape(-1, D.dim))
        out[start:stop] = _sweep(Q, restart[: Q.shape[0]], D, gamma, settings).reshape(stop - start, M)
    return out


def line_dissimilarities(x, D: PointSet, ys, gamma, settings: Optional[SolverSettings] = None) -> np.ndarray:
    """Dissimilarities of ``[y, x]`` for each ``y`` in ``ys`` and one regressor ``x``."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return grid_dissimilarities(x, D, ys, gamma, settings)[0]
