"""Energy and dissipation functionals, structural monitors, decay fits and
the energy-balance audit.

Quadrature is the midpoint rule: cell sums for scalars, face sums for
velocities, both weighted by the cell area. Time derivatives are backward
differences over a history of states taken at a uniform step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import constitutive as cl
from .constitutive import Params
from .grid import Grid, SimState, StaggeredVelocity


class InsufficientHistoryError(ValueError):
    """Raised when a functional needs more stored time levels than supplied."""


# -- containers -----------------------------------------------------------------


@dataclass
class EnergyReport:
    """Functionals and monitors of one state; history-dependent entries are nan if unavailable."""

    time: float
    e_total: float
    d_dissipative: float
    e0: float
    d0: float
    d0_kappa: float
    e1: float
    d1: float
    global_e0: float
    global_d0: float
    div_max: float
    phi_min: float
    phi_max: float
    poincare_ratio: float


class TimeSeries:
    """Samples ``(t, value)`` with strictly increasing ``t``."""

    def __init__(self, t=(), values=()):
        self.t = [float(x) for x in t]
        self.values = [float(x) for x in values]
        if len(self.t) != len(self.values):
            raise ValueError("t and values differ in length")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("sample times must be strictly increasing")

    def append(self, t: float, value: float):
        if self.t and not t > self.t[-1]:
            raise ValueError(f"sample time {t} does not follow {self.t[-1]}")
        self.t.append(float(t))
        self.values.append(float(value))

    def window(self, t1: float | None = None, t2: float | None = None) -> "TimeSeries":
        lo = -math.inf if t1 is None else t1
        hi = math.inf if t2 is None else t2
        pairs = [(a, b) for a, b in zip(self.t, self.values) if lo <= a <= hi]
        return TimeSeries([a for a, _ in pairs], [b for _, b in pairs])

    def __len__(self):
        return len(self.t)

    def arrays(self):
        return np.asarray(self.t), np.asarray(self.values)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    r_squared: float
    degenerate: bool
    samples: int


# -- helpers --------------------------------------------------------------------


def _levels(state: SimState, history: Sequence[SimState], needed: int) -> list[SimState]:
    """``needed`` most recent levels, newest last, after checking the spacing."""
    states = list(history) + [state]
    if len(states) < needed:
        raise InsufficientHistoryError(f"need {needed} time levels, got {len(states)}")
    states = states[-needed:]
    if needed > 1:
        steps = np.diff([s.time for s in states])
        if not (steps > 0).all():
            raise ValueError("history times must be strictly increasing")
        if np.ptp(steps) > 1e-9 * steps.max():
            raise ValueError("history must use a uniform time step")
    return states


def _backward_difference(states: list[SimState], order: int):
    """order-th backward difference of (u, phi, p) at the newest level."""
    coeffs = {0: [1.0], 1: [-1.0, 1.0], 2: [1.0, -2.0, 1.0]}[order]
    tail = states[-len(coeffs):]
    dt = tail[-1].time - tail[-2].time if order else 1.0
    scale = dt**-order
    u = sum((c * s.velocity.u for c, s in zip(coeffs, tail)), np.zeros_like(tail[0].velocity.u))
    v = sum((c * s.velocity.v for c, s in zip(coeffs, tail)), np.zeros_like(tail[0].velocity.v))
    phi = sum((c * s.phase for c, s in zip(coeffs, tail)), np.zeros_like(tail[0].phase))
    p = sum((c * s.pressure for c, s in zip(coeffs, tail)), np.zeros_like(tail[0].pressure))
    return StaggeredVelocity(u * scale, v * scale), phi * scale, p * scale


def _face_density(grid: Grid, phase, params: Params) -> StaggeredVelocity:
    return grid.to_faces(cl.rho(grid.apply_bc_neumann(phase), params))


def _sq(grid: Grid, s) -> float:
    return grid.inner_scalar(s, s)


def _laplacian_sq(grid: Grid, s) -> float:
    return _sq(grid, grid.laplacian_neumann(s))


def _h1_sq(grid: Grid, s) -> float:
    return _sq(grid, s) + grid.grad_norm_sq_scalar(s)


def phase_rate(state: SimState, params: Params) -> np.ndarray:
    """Material derivative gamma (lam lap phi - lam f'(phi) - rho'(phi) |u|^2 / 2) at cell centres."""
    grid = state.grid
    phi = grid.apply_bc_neumann(state.phase)
    vel = grid.apply_bc_velocity(state.velocity)
    out = params.gamma * (
        params.lam * grid.laplacian_neumann(phi)
        - params.lam * cl.f_prime(phi, params)
        - cl.rho_prime(phi, params) * grid.speed_squared(vel) / 2.0
    )
    return grid.apply_bc_neumann(out)


# -- physical energy law ----------------------------------------------------------


def total_energy(state: SimState, params: Params) -> float:
    """Kinetic energy with face densities plus lam (|grad phi|^2 / 2 + f(phi))."""
    grid = state.grid
    vel = grid.apply_bc_velocity(state.velocity)
    kinetic = 0.5 * grid.inner_velocity(vel, vel, weight=_face_density(grid, state.phase, params))
    free = 0.5 * grid.grad_norm_sq_scalar(state.phase) + float(
        np.sum(cl.f(grid.interior(state.phase), params)) * grid.cell_area
    )
    return kinetic + params.lam * free


def dissipation_rate(state: SimState, params: Params) -> float:
    """Viscous dissipation mu |grad u|^2 plus |phi_dot|^2 / gamma."""
    grid = state.grid
    rate = phase_rate(state, params)
    return params.mu * grid.grad_norm_sq_velocity(state.velocity) + _sq(grid, rate) / params.gamma


def balance_residual(previous: SimState, current: SimState, params: Params) -> float:
    """(E(t_{k+1}) - E(t_k)) / dt + D(t_{k+1}) for one pair of consecutive states."""
    dt = current.time - previous.time
    if not dt > 0:
        raise ValueError("states must be in increasing time order")
    return (total_energy(current, params) - total_energy(previous, params)) / dt + dissipation_rate(current, params)


def energy_balance_audit(history: Sequence[SimState], params: Params) -> TimeSeries:
    """Residual of the discrete energy law for every consecutive pair of ``history``."""
    if len(history) < 2:
        raise InsufficientHistoryError("the audit needs at least two states")
    _levels(history[-1], history[:-1], len(history))
    energies = [total_energy(s, params) for s in history]
    out = TimeSeries()
    for k in range(len(history) - 1):
        dt = history[k + 1].time - history[k].time
        out.append(history[k + 1].time, (energies[k + 1] - energies[k]) / dt + dissipation_rate(history[k + 1], params))
    return out


# -- order-j functionals ---------------------------------------------------------------


def _energy_terms(grid, vel, phi, rho_faces, params: Params, shifted: bool) -> float:
    gl = params.gamma * params.lam
    if shifted:
        w0, w1 = 1.0 + 2.0 * gl / params.epsilon**2, 1.0 + gl + 2.0 * gl / params.epsilon**2
    else:
        w0, w1 = 1.0, gl + 1.0
    return (
        grid.inner_velocity(vel, vel, weight=rho_faces)
        + params.mu * grid.grad_norm_sq_velocity(vel)
        + w0 * _sq(grid, phi)
        + w1 * grid.grad_norm_sq_scalar(phi)
        + gl * _laplacian_sq(grid, phi)
    )


def _dissipation_terms(grid, vel, vel_t, phi, phi_t, p, rho_faces, params: Params, shifted: bool):
    gl = params.gamma * params.lam
    damping = 2.0 * gl / params.epsilon**2
    main = (
        params.mu * grid.grad_norm_sq_velocity(vel)
        + grid.inner_velocity(vel_t, vel_t, weight=rho_faces)
        + ((gl + damping) if shifted else gl) * grid.grad_norm_sq_scalar(phi)
        + _sq(grid, phi_t)
        + gl * _laplacian_sq(grid, phi)
        + grid.grad_norm_sq_scalar(phi_t)
    )
    if shifted:
        main += damping * _sq(grid, phi)
    lap_u = grid.laplacian_dirichlet(vel)
    kappa = params.kappa * (
        grid.inner_velocity(lap_u, lap_u)
        + grid.grad_norm_sq_scalar(grid.laplacian_neumann(phi))
        + _h1_sq(grid, p)
    )
    return main, kappa


def _perturbation(phase, params: Params):
    return phase - params.sign


def functional_E(state: SimState, params: Params, history: Sequence[SimState] = (), order: int = 0,
                 shifted: bool = False) -> float:
    """Order-``order`` energy functional; ``shifted`` measures varphi = phi -+ 1 with the global weights."""
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are available")
    states = _levels(state, history, order + 1)
    grid = state.grid
    vel, phi, _ = _backward_difference(states, order)
    if shifted and order == 0:
        phi = _perturbation(phi, params)
    return _energy_terms(grid, grid.apply_bc_velocity(vel), grid.apply_bc_neumann(phi),
                         _face_density(grid, state.phase, params), params, shifted)


def functional_D_parts(state: SimState, history: Sequence[SimState], params: Params, order: int = 0,
                       shifted: bool = False) -> tuple[float, float]:
    """Order-``order`` dissipation functional split as (main part, kappa-weighted part).

    The kappa part contains the projection pressure, which differs from the
    model pressure by the gradient field lam |grad phi|^2 / 2 absorbed there.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are available")
    states = _levels(state, history, order + 2)
    grid = state.grid
    vel, phi, p = _backward_difference(states, order)
    vel_t, phi_t, _ = _backward_difference(states, order + 1)
    if shifted and order == 0:
        phi = _perturbation(phi, params)
    return _dissipation_terms(
        grid,
        grid.apply_bc_velocity(vel),
        grid.apply_bc_velocity(vel_t),
        grid.apply_bc_neumann(phi),
        grid.apply_bc_neumann(phi_t),
        grid.apply_bc_neumann(p),
        _face_density(grid, state.phase, params),
        params,
        shifted,
    )


def functional_D(state: SimState, history: Sequence[SimState], params: Params, order: int = 0,
                 shifted: bool = False) -> float:
    main, kappa = functional_D_parts(state, history, params, order, shifted)
    return main + kappa


def functional_E0(state: SimState, params: Params) -> float:
    return functional_E(state, params)


def functional_D0(state: SimState, history: Sequence[SimState], params: Params) -> float:
    return functional_D(state, history, params)


def functional_E1(state: SimState, history: Sequence[SimState], params: Params) -> float:
    return functional_E(state, params, history, order=1)


def functional_D1(state: SimState, history: Sequence[SimState], params: Params) -> float:
    return functional_D(state, history, params, order=1)


def functional_global_E(state: SimState, params: Params) -> float:
    """Energy of the perturbation varphi = phi -+ 1 about the equilibrium of ``params.branch``."""
    return functional_E(state, params, shifted=True)


def functional_global_D(state: SimState, history: Sequence[SimState], params: Params) -> float:
    return functional_D(state, history, params, shifted=True)


def global_weights(params: Params) -> tuple[float, float, float]:
    gl = params.gamma * params.lam
    damping = 2.0 * gl / params.epsilon**2
    return 1.0 + damping, 1.0 + gl + damping, gl + damping


# -- monitors ----------------------------------------------------------------------


def monitors(state: SimState) -> tuple[float, float, float, float]:
    """(max |div u|, min phi, max phi, ||u|| / ||grad u||); the ratio is nan for u = 0."""
    grid = state.grid
    vel = grid.apply_bc_velocity(state.velocity)
    div_max = float(np.abs(grid.interior(grid.divergence(vel))).max())
    phi = grid.interior(state.phase)
    return div_max, float(phi.min()), float(phi.max()), poincare_ratio(grid, vel)


def poincare_ratio(grid: Grid, vel: StaggeredVelocity) -> float:
    grad_sq = grid.grad_norm_sq_velocity(vel)
    if grad_sq <= 0.0:
        return math.nan
    return math.sqrt(grid.inner_velocity(vel, vel) / grad_sq)


def poincare_reference(grid: Grid) -> float:
    """Ratio of the lowest Dirichlet mode sin(pi x / lx) sin(pi y / ly) sampled on the faces."""

    def mode(x, y):
        return np.sin(np.pi * x / grid.lx) * np.sin(np.pi * y / grid.ly)

    return poincare_ratio(grid, grid.sample_velocity(mode, mode))


def energy_report(state: SimState, params: Params, history: Sequence[SimState] = ()) -> EnergyReport:
    """All functionals of ``state``; entries needing more history than given are nan."""

    def attempt(fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except InsufficientHistoryError:
            return math.nan

    try:
        main, kappa = functional_D_parts(state, history, params)
        d0, d0_kappa = main + kappa, kappa
    except InsufficientHistoryError:
        d0 = d0_kappa = math.nan
    div_max, phi_min, phi_max, ratio = monitors(state)
    return EnergyReport(
        time=state.time,
        e_total=total_energy(state, params),
        d_dissipative=dissipation_rate(state, params),
        e0=functional_E0(state, params),
        d0=d0,
        d0_kappa=d0_kappa,
        e1=attempt(functional_E1, state, history, params),
        d1=attempt(functional_D1, state, history, params),
        global_e0=functional_global_E(state, params),
        global_d0=attempt(functional_global_D, state, history, params),
        div_max=div_max,
        phi_min=phi_min,
        phi_max=phi_max,
        poincare_ratio=ratio,
    )


# -- decay fit ----------------------------------------------------------------------


def decay_fit(series: TimeSeries, window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares fit of log(value) = intercept - rate * t over ``window``.

    A series with no variation in log(value) has no meaningful r^2; it is
    reported as ``r_squared = 0`` with ``degenerate = True``.
    """
    if window is not None:
        series = series.window(*window)
    t, values = series.arrays()
    if len(t) < 10:
        raise ValueError(f"decay fit needs at least 10 samples, got {len(t)}")
    if not (np.isfinite(values).all() and (values > 0).all()):
        raise ValueError("decay fit needs finite positive values")
    logs = np.log(values)
    slope, intercept = np.polyfit(t, logs, 1)
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    if ss_tot <= 1e-28 * max(1.0, float(np.sum(logs**2))):
        return DecayFit(0.0, float(logs.mean()), 0.0, True, len(t))
    ss_res = float(np.sum((logs - (slope * t + intercept)) ** 2))
    r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return DecayFit(float(-slope), float(intercept), r2, False, len(t))
