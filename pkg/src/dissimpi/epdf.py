"""Empirical densities built from dissimilarities, and interval estimates."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .dissim import (
    PointSet,
    SolverSettings,
    dissimilarities,
    grid_dissimilarities,
    line_dissimilarities,
    solve_dissimilarity,
)
from .errors import DegenerateRange, DimensionMismatch

# slack on cumulative-probability comparisons so that exact ties survive rounding
CUMSUM_SLACK = 1e-12


@dataclass(frozen=True)
class OutputGrid:
    """Strictly increasing candidate outputs ``ybar_1 < ... < ybar_M``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] < 2:
            raise ValueError("an output grid needs at least two points")
        if not np.all(np.diff(v) > 0):
            raise ValueError("output grid must be strictly increasing")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ConditionalDistribution:
    grid: OutputGrid
    probs: np.ndarray
    dissimilarities: np.ndarray


@dataclass(frozen=True)
class PredictionInterval:
    """Interval ``[lower, upper]`` with the (0-based) grid indices of its endpoints."""

    lower: float
    upper: float
    lower_index: int
    upper_index: int
    tau: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def build_output_grid(outputs, M: int = 2001, padding_fraction: float = 0.15) -> OutputGrid:
    """Equally spaced grid from ``min(outputs)`` to ``max(outputs)``.

    Both ends are pushed out by ``padding_fraction`` times the output range;
    with no padding the grid runs exactly from the smallest to the largest output.
    """
    y = np.asarray(outputs, dtype=float).reshape(-1)
    if y.size == 0:
        raise ValueError("outputs must be nonempty")
    if M < 2:
        raise ValueError("M must be at least 2")
    if padding_fraction < 0:
        raise ValueError("padding_fraction must be nonnegative")
    lo, hi = float(y.min()), float(y.max())
    span = hi - lo
    if not span > 0:
        raise DegenerateRange("outputs have zero range")
    first = lo - padding_fraction * span
    last = hi + padding_fraction * span
    values = first + (last - first) / (M - 1) * np.arange(M)
    values[-1] = last
    return OutputGrid(values)


def probabilities(d, c) -> np.ndarray:
    """Normalized ``exp(-c d)`` along the last axis, shifted by the minimum of ``d``."""
    d = np.asarray(d, dtype=float)
    if c < 0:
        raise ValueError("c must be nonnegative")
    logits = -c * (d - d.min(axis=-1, keepdims=True))
    p = np.exp(logits)
    return p / p.sum(axis=-1, keepdims=True)


def conditional_distribution(x, D: PointSet, grid: OutputGrid, gamma, c,
                             settings: Optional[SolverSettings] = None) -> ConditionalDistribution:
    """Discrete conditional distribution of the output on ``grid`` given regressor ``x``.

    ``D`` holds stacked points ``[y_i, x_i]``.
    """
    d = line_dissimilarities(x, D, grid.values, gamma, settings)
    return ConditionalDistribution(grid, probabilities(d, c), d)


def interval_indices(probs, tau):
    """Quantile indices for one or many distributions (last axis = grid).

    Returns 0-based ``(lower, upper)``: ``upper`` is the smallest index whose
    cumulative probability reaches ``1 - tau`` and ``lower`` the largest index
    whose upper-tail probability reaches ``1 - tau``.
    """
    p = np.asarray(probs, dtype=float)
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    level = 1.0 - tau - CUMSUM_SLACK
    forward = np.cumsum(p, axis=-1)
    backward = np.cumsum(p[..., ::-1], axis=-1)[..., ::-1]
    M = p.shape[-1]
    upper_ok = forward >= level
    lower_ok = backward >= level
    # the full sums are 1, so the last/first entries always qualify
    upper_ok[..., -1] = True
    lower_ok[..., 0] = True
    upper = np.argmax(upper_ok, axis=-1)
    lower = M - 1 - np.argmax(lower_ok[..., ::-1], axis=-1)
    return lower, upper


def interval_estimate(dist: ConditionalDistribution, tau) -> PredictionInterval:
    """Grid interval whose one-sided tail probabilities are each at most ``tau``."""
    if not 0 < tau <= 0.5:
        raise ValueError("tau must lie in (0, 0.5]")
    lower, upper = interval_indices(dist.probs, tau)
    lower, upper = int(lower), int(upper)
    return PredictionInterval(
        lower=float(dist.grid.values[lower]),
        upper=float(dist.grid.values[upper]),
        lower_index=lower,
        upper_index=upper,
        tau=float(tau),
    )


def conditioned_median(dist: ConditionalDistribution) -> float:
    """Center of the interval at ``tau = 0.5``."""
    iv = interval_estimate(dist, 0.5)
    return 0.5 * (iv.lower + iv.upper)


def central_estimate(x, D: PointSet, gamma, settings: Optional[SolverSettings] = None) -> float:
    """Point prediction ``sum_i lam_i y_i`` from the regressor-only program.

    The output coordinate appears in a single equality constraint, so it can be
    dropped from the program and recovered from the optimal weights.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != D.dim - 1:
        raise DimensionMismatch(f"regressor must have dimension {D.dim - 1}, got {x.shape[0]}")
    res = solve_dissimilarity(x, D.marginal(), gamma, settings)
    return float(res.lam @ D.points[:, 0])


def _cell_volume(points: np.ndarray) -> float:
    volume = 1.0
    for axis in range(points.shape[1]):
        coords = np.unique(points[:, axis])
        if coords.size < 2:
            raise ValueError("evaluation grid needs at least two values per axis")
        steps = np.diff(coords)
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
            raise ValueError("evaluation grid must be equally spaced along each axis")
        volume *= float(steps.mean())
    return volume


def empirical_pdf_on_grid(D: PointSet, eval_grid, gamma, c,
                          settings: Optional[SolverSettings] = None,
                          cell_volume: Optional[float] = None) -> np.ndarray:
    """Empirical density ``exp(-c J)`` normalized by a Riemann sum over ``eval_grid``.

    ``eval_grid`` lists the evaluation points (one per row) of a regular grid
    covering the support; the cell volume is inferred from the grid spacing
    unless given.
    """
    pts = np.asarray(eval_grid, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != D.dim:
        raise DimensionMismatch(f"evaluation points must have dimension {D.dim}")
    if cell_volume is None:
        cell_volume = _cell_volume(pts)
    J = dissimilarities(pts, D, gamma, settings)
    log_dens = -c * J
    log_dens -= logsumexp(log_dens) + np.log(cell_volume)
    return np.exp(log_dens)


def predict_intervals(X, D: PointSet, grid: OutputGrid, gamma, c, tau,
                      settings: Optional[SolverSettings] = None, d=None):
    """Intervals and conditioned medians for many regressors at once.

    ``d`` may carry precomputed grid dissimilarities of shape ``(len(X), M)``.
    Returns ``(lower, upper, median)`` arrays in output units.
    """
    if d is None:
        d = grid_dissimilarities(X, D, grid.values, gamma, settings)
    p = probabilities(d, c)
    lo, up = interval_indices(p, tau)
    mlo, mup = interval_indices(p, 0.5)
    g = grid.values
    return g[lo], g[up], 0.5 * (g[mlo] + g[mup])
