"""Semi-implicit time stepping with Picard refinement and variable-density projection.

One step freezes the nonlinear coefficients at the latest iterate (phi_k, u_k)
and solves three linear problems:

    phase      (1/dt + u_k.grad - gamma lam lap) phi = phi_n/dt - gamma lam f'(phi_k)
                                                      - gamma rho'(phi_k) |u_k|^2 / 2
    momentum   (rho_k/dt + rho_k u_k.grad - mu lap) u* = rho_k u_n/dt - lam lap(phi_k) grad(phi_k)
    projection div(grad(q) / rho_k) = div(u*)/dt,   u = u* - dt grad(q) / rho_k

and repeats with the new iterate until the relative change drops below
``picard_tol`` or ``picard_max`` passes were made.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import constitutive as cl
from .constitutive import Params
from .grid import Grid, SimState, StaggeredVelocity, _advect_cells, _lap5
from .solvers import LinearSystem, Stencil, solve_linear


class ModelViolationError(ValueError):
    """Density lost positivity (or became non-finite)."""


class PicardStagnationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 2.5e-4
    picard_max: int = 2
    picard_tol: float = 1e-8
    poisson_tol: float = 1e-9
    poisson_max_iter: int = 5000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if int(self.picard_max) != self.picard_max or self.picard_max < 1:
            raise ValueError("picard_max must be an integer >= 1")
        if not (self.picard_tol > 0 and self.poisson_tol > 0):
            raise ValueError("tolerances must be > 0")
        if int(self.poisson_max_iter) != self.poisson_max_iter or self.poisson_max_iter < 1:
            raise ValueError("poisson_max_iter must be an integer >= 1")


class Formulation(NamedTuple):
    """Constitutive closures seen by the stepper.

    ``reaction(phi)`` is the term multiplied by gamma in the phase equation,
    i.e. lam f'(phi) for the original unknown.
    """

    name: str
    density: Callable
    density_prime: Callable
    reaction: Callable


def _reaction_original(phi, params):
    return params.lam * cl.f_prime(phi, params)


def _reaction_shifted(varphi, params):
    # damping part split off exactly as f'(varphi +- 1) = 2 varphi/eps^2 + h(varphi)
    return params.lam * (2.0 / params.epsilon**2) * varphi + params.lam * cl.h(varphi, params)


ORIGINAL = Formulation("original", cl.rho, cl.rho_prime, _reaction_original)
SHIFTED = Formulation("shifted", cl.varrho, cl.varrho_prime, _reaction_shifted)


@dataclass
class StepInfo:
    picard_iters: int
    picard_residual: float
    residuals: list = field(default_factory=list)


# -- helpers ---------------------------------------------------------------------


def _pad_scalar(grid: Grid, x: np.ndarray) -> np.ndarray:
    s = np.empty(grid.scalar_shape)
    s[1:-1, 1:-1] = x.reshape(grid.nx, grid.ny)
    s[0, :] = s[1, :]
    s[-1, :] = s[-2, :]
    s[:, 0] = s[:, 1]
    s[:, -1] = s[:, -2]
    return s


def face_density(grid: Grid, phase: np.ndarray, params: Params, formulation: Formulation = ORIGINAL):
    """Cell densities and their face averages; raises on non-positive density."""
    rho_c = grid.apply_bc_neumann(formulation.density(phase, params))
    if not (np.isfinite(rho_c).all() and rho_c[1:-1, 1:-1].min() > 0):
        raise ModelViolationError("density is non-positive or non-finite")
    return rho_c, grid.to_faces(rho_c)


# -- phase ------------------------------------------------------------------------


def _advection_coefficients(ue, uw, vn, vs, hx, hy):
    """Stencil of the centred advection operator for given face velocities."""
    return (
        0.5 * (uw - ue) / hx + 0.5 * (vs - vn) / hy,
        -0.5 * uw / hx,
        0.5 * ue / hx,
        -0.5 * vs / hy,
        0.5 * vn / hy,
    )


def phase_step(
    state_n: SimState,
    frozen: SimState,
    cfg: StepperConfig,
    params: Params,
    formulation: Formulation = ORIGINAL,
    forcing_phase: np.ndarray | None = None,
) -> np.ndarray:
    """Implicit phase update with coefficients frozen at ``frozen``."""
    grid = state_n.grid
    dt = cfg.dt
    hx, hy = grid.hx, grid.hy
    gl = params.gamma * params.lam
    adv = grid.apply_bc_velocity(frozen.velocity)
    phi_f = grid.apply_bc_neumann(frozen.phase)
    moving = bool(np.any(adv.u) or np.any(adv.v))

    rhs = (
        state_n.phase / dt
        - params.gamma * formulation.reaction(phi_f, params)
        - params.gamma * formulation.density_prime(phi_f, params) * grid.speed_squared(adv) / 2.0
    )
    if forcing_phase is not None:
        rhs = rhs + forcing_phase

    shape = (grid.nx, grid.ny)
    c = np.full(shape, 1.0 / dt + 2.0 * gl / hx**2 + 2.0 * gl / hy**2)
    w = np.full(shape, -gl / hx**2)
    e = w.copy()
    s = np.full(shape, -gl / hy**2)
    n = s.copy()
    if moving:
        ac, aw, ae, as_, an = _advection_coefficients(
            adv.u[1:, 1:-1], adv.u[:-1, 1:-1], adv.v[1:-1, 1:], adv.v[1:-1, :-1], hx, hy
        )
        c, w, e, s, n = c + ac, w + aw, e + ae, s + as_, n + an
    # Neumann ghosts copy the wall cell
    c[0, :] += w[0, :]
    c[-1, :] += e[-1, :]
    c[:, 0] += s[:, 0]
    c[:, -1] += n[:, -1]

    def exact_apply(x):
        q = _pad_scalar(grid, x)
        out = q[1:-1, 1:-1] / dt - gl * _lap5(q, hx, hy)
        if moving:
            out = out + _advect_cells(adv.u, adv.v, q, hx, hy)
        return out

    system = LinearSystem(Stencil(c, w, e, s, n), symmetric=not moving, exact_apply=exact_apply)
    x = solve_linear(system, rhs[1:-1, 1:-1], cfg.poisson_tol, cfg.poisson_max_iter, x0=grid.interior(phi_f))
    return _pad_scalar(grid, x)


# -- momentum ---------------------------------------------------------------------


def _momentum_stencil(rho, faces, mu, dt, hx, hy, reflect_axis):
    """Stencil of rho/dt + rho (b.grad) - mu lap for one velocity component."""
    c = rho / dt + 2.0 * mu / hx**2 + 2.0 * mu / hy**2
    w = np.full(rho.shape, -mu / hx**2)
    e = w.copy()
    s = np.full(rho.shape, -mu / hy**2)
    n = s.copy()
    if faces is not None:
        ac, aw, ae, as_, an = _advection_coefficients(*faces, hx, hy)
        c, w, e, s, n = c + rho * ac, w + rho * aw, e + rho * ae, s + rho * as_, n + rho * an
    # tangential ghosts are the negated wall neighbour; normal wall faces are fixed at 0
    if reflect_axis == 1:
        c[:, 0] -= s[:, 0]
        c[:, -1] -= n[:, -1]
    else:
        c[0, :] -= w[0, :]
        c[-1, :] -= e[-1, :]
    return Stencil(c, w, e, s, n)


def _u_faces(adv):
    """Advecting velocities on the control volume of each interior u-face."""
    return (
        0.5 * (adv.u[1:-1, 1:-1] + adv.u[2:, 1:-1]),
        0.5 * (adv.u[:-2, 1:-1] + adv.u[1:-1, 1:-1]),
        0.5 * (adv.v[1:-2, 1:] + adv.v[2:-1, 1:]),
        0.5 * (adv.v[1:-2, :-1] + adv.v[2:-1, :-1]),
    )


def _v_faces(adv):
    return (
        0.5 * (adv.u[1:, 1:-2] + adv.u[1:, 2:-1]),
        0.5 * (adv.u[:-1, 1:-2] + adv.u[:-1, 2:-1]),
        0.5 * (adv.v[1:-1, 1:-1] + adv.v[1:-1, 2:]),
        0.5 * (adv.v[1:-1, :-2] + adv.v[1:-1, 1:-1]),
    )


def momentum_predict(
    state_n: SimState,
    frozen: SimState,
    cfg: StepperConfig,
    params: Params,
    formulation: Formulation = ORIGINAL,
    forcing_velocity: StaggeredVelocity | None = None,
) -> StaggeredVelocity:
    """Intermediate velocity u* (pressure deferred to :func:`project`)."""
    grid = state_n.grid
    dt = cfg.dt
    adv = grid.apply_bc_velocity(frozen.velocity)
    moving = bool(np.any(adv.u) or np.any(adv.v))
    _, rho_f = face_density(grid, frozen.phase, params, formulation)
    force = grid.capillary_force(frozen.phase, params.lam)
    if forcing_velocity is not None:
        force = force + forcing_velocity
    un = grid.apply_bc_velocity(state_n.velocity)

    out = grid.velocity()
    for comp, faces in (("u", _u_faces), ("v", _v_faces)):
        rho = getattr(rho_f, comp)[1:-1, 1:-1]
        rhs = rho * getattr(un, comp)[1:-1, 1:-1] / dt + getattr(force, comp)[1:-1, 1:-1]
        stencil = _momentum_stencil(
            rho, faces(adv) if moving else None, params.mu, dt, grid.hx, grid.hy,
            reflect_axis=1 if comp == "u" else 0,
        )
        x0 = getattr(adv, comp)[1:-1, 1:-1]
        sol = solve_linear(
            LinearSystem(stencil, symmetric=not moving), rhs, cfg.poisson_tol, cfg.poisson_max_iter, x0=x0
        )
        getattr(out, comp)[1:-1, 1:-1] = sol
    return grid.apply_bc_velocity(out)


# -- projection -------------------------------------------------------------------


def project(
    grid: Grid,
    u_star: StaggeredVelocity,
    rho_field: np.ndarray,
    cfg: StepperConfig,
    q0: np.ndarray | None = None,
):
    """Variable-density projection; returns the divergence-free velocity and q.

    ``rho_field`` is the cell-centred density. q is the zero-mean pressure.
    """
    grid.check_scalar(rho_field)
    rho_c = grid.apply_bc_neumann(rho_field)
    if not (np.isfinite(rho_c).all() and rho_c[1:-1, 1:-1].min() > 0):
        raise ModelViolationError("density is non-positive or non-finite")
    u_star = grid.apply_bc_velocity(u_star)
    rho_f = grid.to_faces(rho_c)
    dt = cfg.dt
    hx2, hy2 = grid.hx**2, grid.hy**2
    # face coefficients 1/rho, zero on the walls (no normal flux)
    bx = np.zeros((grid.nx + 1, grid.ny))
    by = np.zeros((grid.nx, grid.ny + 1))
    bx[1:-1, :] = 1.0 / rho_f.u[1:-1, 1:-1]
    by[:, 1:-1] = 1.0 / rho_f.v[1:-1, 1:-1]
    stencil = Stencil(
        (bx[1:] + bx[:-1]) / hx2 + (by[:, 1:] + by[:, :-1]) / hy2,
        -bx[:-1] / hx2,
        -bx[1:] / hx2,
        -by[:, :-1] / hy2,
        -by[:, 1:] / hy2,
    )
    rhs = -grid.interior(grid.divergence(u_star)) / dt
    system = LinearSystem(stencil, symmetric=True, singular=True)
    x0 = None if q0 is None else grid.interior(q0)
    q = _pad_scalar(grid, solve_linear(system, rhs, cfg.poisson_tol, cfg.poisson_max_iter, x0=x0))
    g = grid.gradient(q)
    u = u_star.copy()
    u.u[1:-1, 1:-1] -= dt * g.u[1:-1, 1:-1] / rho_f.u[1:-1, 1:-1]
    u.v[1:-1, 1:-1] -= dt * g.v[1:-1, 1:-1] / rho_f.v[1:-1, 1:-1]
    return grid.apply_bc_velocity(u), q


# -- full step --------------------------------------------------------------------


def _relative_change(new: SimState, old: SimState) -> float:
    diff = max(
        np.abs(new.velocity.u - old.velocity.u).max(),
        np.abs(new.velocity.v - old.velocity.v).max(),
        np.abs(new.phase[1:-1, 1:-1] - old.phase[1:-1, 1:-1]).max(),
    )
    if diff == 0.0:
        return 0.0
    scale = max(new.velocity.max_abs(), np.abs(new.phase[1:-1, 1:-1]).max())
    return float(diff / scale) if scale > 0 else float("inf")


def step(
    state: SimState,
    cfg: StepperConfig,
    params: Params,
    formulation: Formulation = ORIGINAL,
    forcing=None,
    advance_phase: bool = True,
    advance_flow: bool = True,
):
    """Advance ``state`` by ``cfg.dt``; returns ``(new_state, StepInfo)``.

    ``forcing(t)`` may return ``(velocity_forcing, phase_forcing)`` added to
    the momentum and phase right-hand sides at the new time level. The
    ``advance_*`` switches freeze one sub-system (used by decoupled
    verification cases).
    """
    grid = state.grid
    t_new = state.time + cfg.dt
    f_vel = f_phi = None
    if forcing is not None:
        f_vel, f_phi = forcing(t_new)
    frozen = state
    residuals = []
    for k in range(1, cfg.picard_max + 1):
        if advance_phase:
            phase = phase_step(state, frozen, cfg, params, formulation, f_phi)
        else:
            phase = state.phase.copy()
        if advance_flow:
            u_star = momentum_predict(state, frozen, cfg, params, formulation, f_vel)
            rho_c, _ = face_density(grid, frozen.phase, params, formulation)
            velocity, pressure = project(grid, u_star, rho_c, cfg, q0=frozen.pressure)
        else:
            velocity, pressure = state.velocity.copy(), state.pressure.copy()
        new = SimState(grid, velocity, pressure, phase, t_new)
        residuals.append(_relative_change(new, frozen))
        frozen = new
        if k >= 3 and residuals[-1] >= residuals[-2] > 0:
            warnings.warn(
                f"Picard residual not decreasing at t={t_new:.6g}: {residuals[-2]:.3e} -> {residuals[-1]:.3e}",
                PicardStagnationWarning,
                stacklevel=2,
            )
        if residuals[-1] <= cfg.picard_tol:
            break
    return frozen, StepInfo(len(residuals), residuals[-1], residuals)
