"""Lorenz time series, normalization, regressor construction, splits and files."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import DegenerateRange, DimensionMismatch, InsufficientData, NonFinite, TooShort


@dataclass(frozen=True)
class LorenzParams:
    """Lorenz system integrated with classical RK4 at a fixed step.

    ``steps`` is the number of returned samples, the initial state included.
    """

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    step: float = 0.1
    initial: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    steps: int = 2500

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if len(self.initial) != 3:
            raise ValueError("initial state needs three components")


class Scale(NamedTuple):
    """Affine normalization ``(v - min) / (max - min)``."""

    min: float
    max: float

    @property
    def span(self) -> float:
        return self.max - self.min


@dataclass(frozen=True)
class Pairs:
    """Regressor/output pairs: ``X`` has one regressor per row, ``y`` the outputs."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X[:, None] if y.shape[0] == X.shape[0] and X.shape[0] > 0 else X[None, :]
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionMismatch("X must have one row per output")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.shape[0]

    def __getitem__(self, idx):
        return Pairs(self.X[idx], self.y[idx])

    @property
    def points(self) -> np.ndarray:
        """Stacked ``[y, x]`` rows."""
        return np.column_stack([self.y, self.X])


@dataclass(frozen=True)
class SeriesDataset:
    series: np.ndarray
    scale: Scale
    pairs: Pairs
    split_sizes: Tuple[int, int, int]
    train: Pairs = field(repr=False)
    validation: Pairs = field(repr=False)
    test: Pairs = field(repr=False)


def lorenz_rhs(state, sigma, rho, beta):
    o, p, q = state
    return np.array([sigma * (p - o), o * (rho - q) - p, o * p - beta * q])


def rk4_step(f, state, h):
    k1 = f(state)
    k2 = f(state + 0.5 * h * k1)
    k3 = f(state + 0.5 * h * k2)
    k4 = f(state + h * k3)
    return state + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_lorenz(params: LorenzParams = LorenzParams()) -> np.ndarray:
    """States ``(o, p, q)`` at times ``0, h, 2h, ...``; shape ``(steps, 3)``."""
    def f(s):
        return lorenz_rhs(s, params.sigma, params.rho, params.beta)

    out = np.empty((params.steps, 3))
    state = np.array(params.initial, dtype=float)
    out[0] = state
    for k in range(1, params.steps):
        with np.errstate(over="ignore", invalid="ignore"):
            state = rk4_step(f, state, params.step)
        if not np.all(np.isfinite(state)):
            raise NonFinite(f"trajectory left the floating-point range at step {k}")
        out[k] = state
    return out


def normalize(series) -> Tuple[np.ndarray, Scale]:
    s = np.asarray(series, dtype=float)
    lo, hi = float(s.min()), float(s.max())
    if not hi > lo:
        raise DegenerateRange("cannot normalize a constant series")
    return (s - lo) / (hi - lo), Scale(lo, hi)


def denormalize(values, scale: Scale) -> np.ndarray:
    return np.asarray(values, dtype=float) * scale.span + scale.min


def build_pairs(series, n_y: int = 2) -> Pairs:
    """Pairs ``x_k = [y_{k-1}, ..., y_{k-n_y}]``, output ``y_k`` for ``k >= n_y``."""
    s = np.asarray(series, dtype=float).reshape(-1)
    if n_y < 1:
        raise ValueError("n_y must be at least 1")
    if s.shape[0] <= n_y:
        raise TooShort(f"series of length {s.shape[0]} has no pairs with n_y={n_y}")
    K = s.shape[0] - n_y
    X = np.column_stack([s[n_y - lag: n_y - lag + K] for lag in range(1, n_y + 1)])
    return Pairs(X, s[n_y:])


def split(pairs: Pairs, n_train: int, n_validation: int, n_test: int) -> Tuple[Pairs, Pairs, Pairs]:
    """Contiguous chronological segments: training, then validation, then test."""
    sizes = (n_train, n_validation, n_test)
    if min(sizes) < 0:
        raise ValueError("split sizes must be nonnegative")
    if sum(sizes) > len(pairs):
        raise InsufficientData(f"requested {sum(sizes)} pairs but only {len(pairs)} exist")
    a = n_train
    b = a + n_validation
    return pairs[:a], pairs[a:b], pairs[b:b + n_test]


def make_lorenz_dataset(params: LorenzParams = LorenzParams(), n_y: int = 2,
                        sizes: Tuple[int, int, int] = (200, 1000, 1000),
                        burn_in: int = 0) -> SeriesDataset:
    """Simulate, normalize the ``o`` component, build pairs and split them.

    ``burn_in`` discards that many leading samples before anything else.
    """
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    o = simulate_lorenz(params)[burn_in:, 0]
    series, scale = normalize(o)
    pairs = build_pairs(series, n_y)
    train, validation, test = split(pairs, *sizes)
    return SeriesDataset(series, scale, pairs, tuple(sizes), train, validation, test)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_pairs(path, pairs: Pairs, scale: Optional[Scale] = None) -> None:
    """Write pairs as CSV: a scale comment line, a header, then ``y_km1, ..., y`` rows."""
    n_y = pairs.X.shape[1]
    header = ",".join([f"y_km{lag}" for lag in range(1, n_y + 1)] + ["y"])
    lines = []
    if scale is not None:
        lines.append(f"# scale_min={_fmt(scale.min)},scale_max={_fmt(scale.max)}")
    lines.append(header)
    for x, y in zip(pairs.X, pairs.y):
        lines.append(",".join([_fmt(v) for v in x] + [_fmt(y)]))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_scale(comment: str) -> Optional[Scale]:
    fields = dict(
        item.split("=", 1) for item in comment.lstrip("#").strip().split(",") if "=" in item
    )
    if "scale_min" in fields and "scale_max" in fields:
        return Scale(float(fields["scale_min"]), float(fields["scale_max"]))
    return None


def read_table(path):
    """Read a headed CSV with optional leading ``#`` comments.

    Returns ``(header, values, scale)``; ``scale`` is None when no comment carries it.
    """
    scale = None
    header = None
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            scale = _parse_scale(line) or scale
            continue
        if header is None:
            header = [h.strip() for h in line.split(",")]
            continue
        rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: missing header line")
    values = np.array(rows, dtype=float).reshape(-1, len(header))
    return header, values, scale


def read_pairs(path) -> Tuple[Pairs, Optional[Scale]]:
    """Inverse of :func:`write_pairs`; the last column is the output."""
    header, values, scale = read_table(path)
    if len(header) < 2:
        raise ValueError(f"{path}: need at least one regressor column and the output")
    return Pairs(values[:, :-1], values[:, -1]), scale
