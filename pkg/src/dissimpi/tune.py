"""Tuning of the concentration ``c`` and sparsity weight ``gamma`` on a validation set."""
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .data import Pairs, Scale
from .dissim import PointSet, SolverSettings, dissimilarities, grid_dissimilarities
from .epdf import OutputGrid, interval_indices, probabilities
from .errors import InvalidBracket

log = logging.getLogger(__name__)

ValidationSet = Pairs


@dataclass(frozen=True)
class DissimilarityTable:
    """Per-``gamma`` dissimilarities of a validation set, independent of ``c``.

    ``grid`` has shape ``(N_V, M)``: the dissimilarity of ``[ybar_j, x_s]``.
    ``observed`` holds the dissimilarity of the true pair ``[y_s, x_s]``.
    """

    gamma: float
    grid: np.ndarray
    observed: np.ndarray
    outputs: np.ndarray


@dataclass(frozen=True)
class BisectionTrace:
    value: float
    midpoints: Tuple[float, ...]
    accepted: Tuple[bool, ...]
    endpoint_passes: bool
    non_monotone: bool


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    c: float
    likelihood: float
    violations: Tuple[int, int]
    trace: BisectionTrace = field(repr=False)


@dataclass(frozen=True)
class TuningReport:
    gamma_star: float
    c_star: float
    tau: float
    rows: Tuple[GammaResult, ...]

    @property
    def likelihoods(self) -> List[Tuple[float, float, float]]:
        return [(r.gamma, r.c, r.likelihood) for r in self.rows]

    @property
    def per_gamma_violations(self) -> List[Tuple[int, int]]:
        return [r.violations for r in self.rows]


@dataclass(frozen=True)
class EvaluationMetrics:
    """Hit fraction and widths on a test set.

    ``mean_width_original`` is None when no scale is available.
    """

    empirical_probability: float
    mean_width: float
    mean_width_original: Optional[float]
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    hits: np.ndarray = field(repr=False)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def per_sample(self):
        return [((lo, up), bool(h), up - lo) for lo, up, h in zip(self.lower, self.upper, self.hits)]


def check_disjoint(D: PointSet, V: ValidationSet) -> int:
    """Count validation pairs that duplicate a stored point exactly; warn if any."""
    stored = {tuple(row) for row in D.points}
    dup = sum(tuple(row) in stored for row in V.points)
    if dup:
        warnings.warn(f"{dup} validation pairs also appear in the training set", stacklevel=2)
    return dup


def _check_tau(tau):
    if not 0 < tau < 0.5:
        raise ValueError("tau must lie in (0, 0.5)")


def dissimilarity_table(D: PointSet, V: ValidationSet, grid: OutputGrid, gamma,
                        settings: Optional[SolverSettings] = None) -> DissimilarityTable:
    if len(V) < 1:
        raise ValueError("validation set is empty")
    d = grid_dissimilarities(V.X, D, grid.values, gamma, settings)
    obs = dissimilarities(V.points, D, gamma, settings)
    for a in (d, obs):
        a.flags.writeable = False
    return DissimilarityTable(float(gamma), d, obs, V.y)


def violation_counts(table: DissimilarityTable, grid: OutputGrid, c, tau) -> Tuple[int, int]:
    """Numbers of outputs above (``n_plus``) and below (``n_minus``) their intervals."""
    lo, up = interval_indices(probabilities(table.grid, c), tau)
    y = table.outputs
    g = grid.values
    return int(np.count_nonzero(y > g[up])), int(np.count_nonzero(y < g[lo]))


def bisect_c(violation_fn: Callable[[float], Tuple[int, int]], n: int, tau, c_max, epsilon) -> BisectionTrace:
    """Bisection on ``[0, c_max]``; a midpoint passes iff ``max(n_plus, n_minus) / n < tau``.

    Passing midpoints move the lower end up, failing ones move the upper end
    down.  The returned value is the last passing midpoint, or 0.
    """
    if not c_max > 0:
        raise InvalidBracket("c_max must be positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")

    def passes(c):
        return max(violation_fn(c)) / n < tau

    endpoint = passes(c_max)
    if endpoint:
        warnings.warn(f"validation test still passes at c_max={c_max}; consider raising c_max",
                      stacklevel=2)
    lo, hi = 0.0, float(c_max)
    mids, acc = [], []
    while hi - lo >= epsilon:
        c = 0.5 * (lo + hi)
        ok = passes(c)
        mids.append(c)
        acc.append(ok)
        if ok:
            lo = c
        else:
            hi = c
    # a failure below a pass (or below a passing c_max) contradicts monotonicity
    failed = [c for c, ok in zip(mids, acc) if not ok]
    passed = [c for c, ok in zip(mids, acc) if ok] + ([float(c_max)] if endpoint else [])
    non_monotone = bool(failed and passed and min(failed) < max(passed))
    return BisectionTrace(lo, tuple(mids), tuple(acc), endpoint, non_monotone)


def tune_c(gamma, tau, D: PointSet, V: ValidationSet, grid: OutputGrid, c_max=None, epsilon=1e-2,
           settings: Optional[SolverSettings] = None, table: Optional[DissimilarityTable] = None,
           ) -> BisectionTrace:
    """Largest ``c`` (up to ``epsilon``) whose validation intervals meet the ``tau`` test.

    ``c_max`` defaults to ``10 * len(D)``.  Passing a precomputed ``table``
    skips all dissimilarity solves.
    """
    _check_tau(tau)
    if c_max is None:
        c_max = 10.0 * len(D)
    if table is None:
        table = dissimilarity_table(D, V, grid, gamma, settings)
    return bisect_c(lambda c: violation_counts(table, grid, c, tau), len(table.outputs), tau, c_max, epsilon)


def likelihood_from_table(table: DissimilarityTable, c) -> float:
    terms = -c * table.observed - logsumexp(-c * table.grid, axis=1)
    return float(np.sum(terms))


def log_likelihood(gamma, c, D: PointSet, V: ValidationSet, grid: OutputGrid,
                   settings: Optional[SolverSettings] = None,
                   table: Optional[DissimilarityTable] = None) -> float:
    """Validation log-likelihood of ``exp(-c J)`` normalized over the grid.

    The numerator uses the exact validation output, not its nearest grid point.
    """
    if table is None:
        table = dissimilarity_table(D, V, grid, gamma, settings)
    return likelihood_from_table(table, c)


def _check_gammas(gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float).reshape(-1)
    if g.size == 0:
        raise ValueError("gamma candidates must be nonempty")
    if np.any(g < 0) or np.any(np.diff(g) < 0):
        raise ValueError("gamma candidates must be nonnegative and sorted ascending")
    return g


def _select(rows: List[GammaResult], tau) -> TuningReport:
    best = rows[0]
    for r in rows[1:]:
        if r.likelihood > best.likelihood:
            best = r
    return TuningReport(best.gamma, best.c, float(tau), tuple(rows))


def tune_gamma_multi(gammas: Sequence[float], taus: Sequence[float], D: PointSet, V: ValidationSet,
                     grid: OutputGrid, c_max=None, epsilon=1e-2,
                     settings: Optional[SolverSettings] = None) -> List[TuningReport]:
    """One report per ``tau``; the dissimilarity table of each ``gamma`` is shared."""
    g = _check_gammas(gammas)
    for tau in taus:
        _check_tau(tau)
    check_disjoint(D, V)
    rows = [[] for _ in taus]
    for gamma in g:
        table = dissimilarity_table(D, V, grid, gamma, settings)
        for i, tau in enumerate(taus):
            trace = tune_c(gamma, tau, D, V, grid, c_max, epsilon, settings, table)
            counts = violation_counts(table, grid, trace.value, tau)
            L = likelihood_from_table(table, trace.value)
            rows[i].append(GammaResult(float(gamma), trace.value, L, counts, trace))
            log.info("gamma=%g tau=%g c=%.6g L=%.6f violations=%s", gamma, tau, trace.value, L, counts)
    return [_select(r, tau) for r, tau in zip(rows, taus)]


def tune_gamma(gammas: Sequence[float], tau, D: PointSet, V: ValidationSet, grid: OutputGrid,
               c_max=None, epsilon=1e-2, settings: Optional[SolverSettings] = None) -> TuningReport:
    """Pick ``gamma`` by maximum validation likelihood, each at its tuned ``c``.

    Ties go to the smaller ``gamma``.
    """
    return tune_gamma_multi(gammas, [tau], D, V, grid, c_max, epsilon, settings)[0]


def interval_metrics(lower, upper, y, scale: Optional[Scale] = None) -> EvaluationMetrics:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    y = np.asarray(y, dtype=float)
    if not lower.shape == upper.shape == y.shape:
        raise ValueError("lower, upper and y must have the same shape")
    if y.size == 0:
        raise ValueError("no samples to evaluate")
    hits = (lower <= y) & (y <= upper)
    width = float(np.mean(upper - lower))
    return EvaluationMetrics(
        empirical_probability=int(np.count_nonzero(hits)) / y.size,
        mean_width=width,
        mean_width_original=None if scale is None else width * scale.span,
        lower=lower, upper=upper, hits=hits,
    )


def evaluate(D: PointSet, test: ValidationSet, grid: OutputGrid, gamma, c, tau,
             settings: Optional[SolverSettings] = None, scale: Optional[Scale] = None,
             table: Optional[DissimilarityTable] = None) -> EvaluationMetrics:
    """Interval hit rate and mean width of the predictor on ``test``."""
    d = table.grid if table is not None else grid_dissimilarities(test.X, D, grid.values, gamma, settings)
    lo, up = interval_indices(probabilities(d, c), tau)
    return interval_metrics(grid.values[lo], grid.values[up], test.y, scale)
