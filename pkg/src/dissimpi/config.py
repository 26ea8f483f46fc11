"""Flat ``key = value`` run configuration."""
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .data import LorenzParams
from .dissim import SolverSettings


@dataclass(frozen=True)
class RunConfig:
    """Everything that affects the results of a pipeline run.

    ``c_max = None`` means ``10 * N_D``.
    """

    source: str = "generate-lorenz"
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    step: float = 0.1
    initial: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    steps: int = 2500
    burn_in: int = 0
    n_y: int = 2
    n_train: int = 200
    n_validation: int = 1000
    n_test: int = 1000
    tau: float = 0.05
    gamma_min: float = 0.0
    gamma_max: float = 3.0
    gamma_step: float = 0.1
    grid_size: int = 2001
    padding: float = 0.15
    primal_tolerance: float = 1e-8
    max_iterations: int = 50000
    c_max: Optional[float] = None
    epsilon: float = 1e-2
    gamma: Optional[float] = None
    c: Optional[float] = None
    out: str = "out"

    def __post_init__(self):
        if not 0 < self.tau < 0.5:
            raise ValueError("tau must lie in (0, 0.5)")
        if not self.gamma_step > 0:
            raise ValueError("gamma_step must be positive")
        if self.gamma_min < 0 or self.gamma_max < self.gamma_min:
            raise ValueError("need 0 <= gamma_min <= gamma_max")
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if self.padding < 0:
            raise ValueError("padding must be nonnegative")
        if self.c_max is not None and not self.c_max > 0:
            raise ValueError("c_max must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if min(self.n_train, self.n_validation, self.n_test, self.burn_in) < 0:
            raise ValueError("sizes must be nonnegative")
        if self.n_y < 1:
            raise ValueError("n_y must be at least 1")

    @property
    def gammas(self) -> np.ndarray:
        """Candidates ``gamma_min, gamma_min + step, ...`` up to ``gamma_max`` inclusive."""
        count = int(np.floor((self.gamma_max - self.gamma_min) / self.gamma_step + 1e-9)) + 1
        # rounded so that 0.1-steps print as 0.3 rather than 0.30000000000000004
        return np.round(self.gamma_min + self.gamma_step * np.arange(count), 12)

    @property
    def lorenz(self) -> LorenzParams:
        return LorenzParams(self.sigma, self.rho, self.beta, self.step, tuple(self.initial), self.steps)

    @property
    def solver(self) -> SolverSettings:
        return SolverSettings(primal_tolerance=self.primal_tolerance, max_iterations=self.max_iterations)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return (self.n_train, self.n_validation, self.n_test)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def items(self):
        for k, v in asdict(self).items():
            yield k, format_value(v)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(key: str, text: str):
    default = getattr(RunConfig, key, None)
    text = text.strip()
    if key == "initial":
        vals = tuple(float(t) for t in text.split(","))
        if len(vals) != 3:
            raise ValueError("initial needs three comma-separated values")
        return vals
    if key in ("source", "out"):
        return text
    if text.lower() in ("auto", "none", ""):
        return None
    if isinstance(default, int) and not isinstance(default, bool):
        return int(text)
    return float(text)


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, val)
    return values


def load_config(path=None, **overrides) -> RunConfig:
    values = parse_config_text(Path(path).read_text()) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def write_key_values(path, items) -> None:
    Path(path).write_text("".join(f"{k} = {v}\n" for k, v in items))


def read_key_values(path) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
    return out
