"""Drive the stepper from a RunConfig, writing ``series.csv`` and snapshots.

Exit statuses: 0 success, 1 the simulation failed (the last good state is
flushed to ``last_good.acns``), 2 invalid configuration or output directory.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field

from . import diagnostics as dg
from .config import ConfigError, RunConfig
from .grid import SimState
from .initial import initial_condition
from .snapshot import snapshot_write
from .solvers import SolverError
from .stepper import ModelViolationError, step

log = logging.getLogger(__name__)

SERIES_COLUMNS = (
    "t",
    "e_total",
    "d_dissipative",
    "e0",
    "d0",
    "global_e0",
    "div_max",
    "phi_min",
    "phi_max",
    "poincare_ratio",
    "picard_iters",
    "balance_residual",
)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class NonFiniteStateError(RuntimeError):
    pass


@dataclass
class RunResult:
    status: int
    rows: list = field(default_factory=list)
    state: SimState | None = None
    error: str | None = None
    output_dir: str | None = None

    def column(self, name: str):
        return [row[name] for row in self.rows]


def series_row(state: SimState, previous: SimState | None, params, picard_iters: int) -> dict:
    history = [] if previous is None else [previous]
    rep = dg.energy_report(state, params, history)
    return {
        "t": state.time,
        "e_total": rep.e_total,
        "d_dissipative": rep.d_dissipative,
        "e0": rep.e0,
        "d0": rep.d0,
        "global_e0": rep.global_e0,
        "div_max": rep.div_max,
        "phi_min": rep.phi_min,
        "phi_max": rep.phi_max,
        "poincare_ratio": rep.poincare_ratio,
        "picard_iters": picard_iters,
        "balance_residual": math.nan if previous is None else dg.balance_residual(previous, state, params),
    }


def _fmt(value) -> str:
    return str(value) if isinstance(value, int) else f"{value:.17g}"


def simulate(cfg: RunConfig, output_dir: str | None = None, write_snapshots: bool = True) -> RunResult:
    """Run ``cfg``; ``output_dir=None`` uses the configured (or environment) directory."""
    out = output_dir or cfg.resolved_output_dir()
    params, scfg = cfg.params(), cfg.stepper()
    try:
        state = initial_condition(cfg)
    except ValueError as exc:
        return RunResult(EXIT_CONFIG, error=str(exc))
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        return RunResult(EXIT_CONFIG, error=f"cannot create output directory: {exc}")

    result = RunResult(EXIT_OK, state=state, output_dir=out)
    series_path = os.path.join(out, "series.csv")
    with open(series_path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)

        def emit(row):
            result.rows.append(row)
            writer.writerow([_fmt(row[c]) for c in SERIES_COLUMNS])
            fh.flush()

        def snap(s, k):
            if write_snapshots:
                snapshot_write(s, os.path.join(out, f"snap_{k:07d}.acns"))

        emit(series_row(state, None, params, 0))
        snap(state, 0)
        for k in range(1, cfg.steps + 1):
            try:
                new, info = step(state, scfg, params)
                if not new.is_finite():
                    raise NonFiniteStateError(f"non-finite field at step {k}")
            except (SolverError, ModelViolationError, NonFiniteStateError) as exc:
                snapshot_write(state, os.path.join(out, "last_good.acns"))
                log.error("step %d failed: %s", k, exc)
                result.status, result.error = EXIT_FAILED, f"step {k}: {exc}"
                return result
            # time on an exact grid of multiples of dt
            new.time = k * scfg.dt
            if k % cfg.output_every == 0 or k == cfg.steps:
                emit(series_row(new, state, params, info.picard_iters))
                snap(new, k)
            state = new
            result.state = state
    return result


def run(cfg: RunConfig, output_dir: str | None = None) -> int:
    return simulate(cfg, output_dir).status


def decay(cfg: RunConfig, output_dir: str | None = None, skip_fraction: float = 0.1):
    """Run ``cfg`` and fit exponential decay of global_e0 after the first ``skip_fraction`` of the run."""
    result = simulate(cfg, output_dir)
    if result.status != EXIT_OK:
        return result, None
    series = dg.TimeSeries(result.column("t"), result.column("global_e0"))
    fit = dg.decay_fit(series, (skip_fraction * cfg.t_end, math.inf))
    return result, fit


__all__ = ["ConfigError", "RunResult", "SERIES_COLUMNS", "decay", "run", "series_row", "simulate"]
