"""Run configuration: ``key = value`` text with ``#`` comments.

Every key is optional; omitted keys take the defaults below. Parsing errors
carry the offending line number.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, fields

from .constitutive import BRANCHES, Params
from .grid import Grid
from .stepper import StepperConfig
from .verify import CASES

OUTPUT_DIR_ENV = "ACNS_OUTPUT_DIR"

PRESETS = ("equilibrium", "perturbed_equilibrium", "bubble", "mms", "random_perturbation")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    # physics
    rho1: float = 1.0
    rho2: float = 3.0
    mu: float = 1.0
    lam: float = 0.01
    gamma: float = 1.0
    epsilon: float = 0.1
    branch: str = "plus"
    kappa: float = 1e-2
    # time stepping
    dt: float = 2.5e-4
    picard_max: int = 2
    picard_tol: float = 1e-8
    poisson_tol: float = 1e-9
    poisson_max_iter: int = 5000
    # grid
    nx: int = 64
    ny: int = 64
    lx: float = 1.0
    ly: float = 1.0
    # run control
    t_end: float = 0.1
    output_every: int = 100
    output_dir: str = "output"
    seed: int = 0
    # initial condition
    ic: str = "bubble"
    ic_amplitude: float = 0.05
    ic_mode: int = 1
    ic_radius: float = 0.25
    ic_width: float | None = None
    ic_velocity: float = 0.0
    ic_case: str = "swirl"

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if self.output_every < 1:
            raise ConfigError("output_every must be >= 1")
        if self.ic not in PRESETS:
            raise ConfigError(f"ic must be one of {PRESETS}, got {self.ic!r}")
        if self.ic_mode < 1:
            raise ConfigError("ic_mode must be >= 1")
        if not self.ic_radius > 0:
            raise ConfigError("ic_radius must be > 0")
        if self.ic_width is not None and not self.ic_width > 0:
            raise ConfigError("ic_width must be > 0")
        if self.ic_case not in CASES:
            raise ConfigError(f"ic_case must be one of {tuple(CASES)}, got {self.ic_case!r}")
        if not self.ic_velocity >= 0:
            raise ConfigError("ic_velocity must be >= 0")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("t_end must be a whole number of time steps")
        self.params()
        self.stepper()
        self.grid()

    def params(self) -> Params:
        return Params(self.rho1, self.rho2, self.mu, self.lam, self.gamma, self.epsilon, self.branch, self.kappa)

    def stepper(self) -> StepperConfig:
        return StepperConfig(self.dt, self.picard_max, self.picard_tol, self.poisson_tol, self.poisson_max_iter)

    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly)

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def resolved_output_dir(self) -> str:
        return os.environ.get(OUTPUT_DIR_ENV) or self.output_dir


# file key -> field name
_KEY_TO_FIELD = {f.name: f.name for f in fields(RunConfig)}
del _KEY_TO_FIELD["lam"]
_KEY_TO_FIELD["lambda"] = "lam"
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}

_INT_FIELDS = {"picard_max", "poisson_max_iter", "nx", "ny", "output_every", "seed", "ic_mode"}
_STR_FIELDS = {"branch", "output_dir", "ic", "ic_case"}
_OPTIONAL_FIELDS = {"ic_width"}

# fields whose invariants involve several keys
_JOINT = {("rho1", "rho2"), ("t_end", "dt")}


def _convert(name: str, raw: str, line: int):
    if name in _STR_FIELDS:
        if not raw:
            raise ConfigError(f"empty value for {_FIELD_TO_KEY[name]}", line)
        if name == "branch" and raw not in BRANCHES:
            raise ConfigError(f"branch must be one of {BRANCHES}, got {raw!r}", line)
        return raw
    if name in _OPTIONAL_FIELDS and raw.lower() == "none":
        return None
    try:
        if name in _INT_FIELDS:
            value = int(raw)
        else:
            value = float(raw)
    except ValueError:
        kind = "an integer" if name in _INT_FIELDS else "a number"
        raise ConfigError(f"{_FIELD_TO_KEY[name]} must be {kind}, got {raw!r}", line) from None
    if not math.isfinite(value):
        raise ConfigError(f"{_FIELD_TO_KEY[name]} must be finite", line)
    return value


def _check_single(name: str, value, line: int):
    """Re-run validation with only this field changed to locate single-key errors."""
    try:
        RunConfig(**{name: value})
    except ValueError as exc:
        msg = str(exc)
        if any(name in pair for pair in _JOINT) and ("rho1 < rho2" in msg or "whole number" in msg):
            return
        raise ConfigError(msg, line) from None


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"unknown key {key!r}", lineno)
        name = _KEY_TO_FIELD[key]
        if name in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        value = _convert(name, raw, lineno)
        _check_single(name, value, lineno)
        values[name] = value
        lines[name] = lineno
    try:
        return RunConfig(**values)
    except ValueError as exc:
        msg = str(exc)
        involved = [n for pair in _JOINT for n in pair if n in lines and (
            ("rho1 < rho2" in msg and n in ("rho1", "rho2")) or ("whole number" in msg and n in ("t_end", "dt")))]
        raise ConfigError(msg, max((lines[n] for n in involved), default=None)) from None


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for name, value in asdict(cfg).items():
        if value is None:
            continue
        if isinstance(value, float):
            value = repr(value)
        out.append(f"{_FIELD_TO_KEY[name]} = {value}")
    return "\n".join(out) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
