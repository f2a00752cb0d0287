"""Initial-condition presets. All presets give a discretely divergence-free
velocity and a phase field inside [-1, 1]."""
from __future__ import annotations

import numpy as np

from .config import RunConfig
from .grid import Grid, SimState, StaggeredVelocity
from .verify import CASES


def equilibrium(grid: Grid, sign: int) -> SimState:
    return SimState(grid, grid.velocity(), grid.scalar(), grid.scalar(float(sign)))


def perturbed_equilibrium(grid: Grid, sign: int, amplitude: float, mode: int = 1) -> SimState:
    """phi = sign - sign * amplitude * (1 + cos(m pi x / lx) cos(m pi y / ly)) / 2, at rest."""
    if not 0 <= amplitude <= 2:
        raise ValueError(f"amplitude {amplitude} pushes phi outside [-1, 1]")

    def bump(x, y):
        return 0.5 * (1.0 + np.cos(mode * np.pi * x / grid.lx) * np.cos(mode * np.pi * y / grid.ly))

    phi = grid.sample_scalar(lambda x, y: sign - sign * amplitude * bump(x, y))
    return SimState(grid, grid.velocity(), grid.scalar(), phi)


def bubble(grid: Grid, radius: float, width: float, center=None) -> SimState:
    """Disc of phi = -1 in phi = +1 with a tanh profile, clamped to [-1, 1]."""
    cx, cy = center if center is not None else (0.5 * grid.lx, 0.5 * grid.ly)

    def profile(x, y):
        r = np.hypot(x - cx, y - cy)
        return np.clip(np.tanh((r - radius) / (np.sqrt(2.0) * width)), -1.0, 1.0)

    return SimState(grid, grid.velocity(), grid.scalar(), grid.sample_scalar(profile))


def solenoidal(grid: Grid, stream: np.ndarray) -> StaggeredVelocity:
    """Velocity from a stream function on the cell corners, interior corners only.

    The result is divergence-free to round-off and vanishes normal to the walls.
    """
    psi = np.zeros((grid.nx + 1, grid.ny + 1))
    psi[1:-1, 1:-1] = stream
    vel = grid.velocity()
    vel.u[:, 1:-1] = (psi[:, 1:] - psi[:, :-1]) / grid.hy
    vel.v[1:-1, :] = -(psi[1:, :] - psi[:-1, :]) / grid.hx
    return grid.apply_bc_velocity(vel)


def random_perturbation(grid: Grid, sign: int, amplitude: float, velocity: float, seed: int) -> SimState:
    """phi = sign - sign * amplitude * U(0, 1) per cell plus a random solenoidal velocity."""
    if not 0 <= amplitude <= 2:
        raise ValueError(f"amplitude {amplitude} pushes phi outside [-1, 1]")
    rng = np.random.default_rng(seed)
    phi = grid.scalar()
    phi[1:-1, 1:-1] = sign - sign * amplitude * rng.random((grid.nx, grid.ny))
    stream = rng.standard_normal((grid.nx - 1, grid.ny - 1))
    vel = solenoidal(grid, stream)
    peak = vel.max_abs()
    if peak > 0:
        vel = vel * (velocity / peak)
    return SimState(grid, vel, grid.scalar(), grid.apply_bc_neumann(phi))


def initial_condition(cfg: RunConfig) -> SimState:
    grid = cfg.grid()
    sign = cfg.params().sign
    if cfg.ic == "equilibrium":
        return equilibrium(grid, sign)
    if cfg.ic == "perturbed_equilibrium":
        return perturbed_equilibrium(grid, sign, cfg.ic_amplitude, cfg.ic_mode)
    if cfg.ic == "bubble":
        width = cfg.epsilon if cfg.ic_width is None else cfg.ic_width
        return bubble(grid, cfg.ic_radius, width)
    if cfg.ic == "mms":
        return CASES[cfg.ic_case].state(grid, 0.0)
    if cfg.ic == "random_perturbation":
        return random_perturbation(grid, sign, cfg.ic_amplitude, cfg.ic_velocity, cfg.seed)
    raise ValueError(f"unknown preset {cfg.ic!r}")
