"""MAC-staggered grid on a rectangle, field containers and discrete operators.

Array layout (index order ``[i, j]`` with ``i`` along x):

* scalars (phi, p, rho, ...): shape ``(nx + 2, ny + 2)``; cell ``(i, j)`` with
  ``1 <= i <= nx`` sits at ``((i - 1/2) hx, (j - 1/2) hy)``; index 0 and
  ``n + 1`` are ghost cells.
* u: shape ``(nx + 1, ny + 2)``; face ``i`` sits at ``x = i hx``, faces 0 and
  ``nx`` lie on the walls; rows ``j`` follow the scalar rows (with ghosts).
* v: shape ``(nx + 2, ny + 1)``; the transpose of the u layout.

Boundary conditions: no-slip velocity (normal faces zero, tangential ghosts by
linear reflection) and homogeneous Neumann for scalars (ghost = neighbour).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class StaggeredVelocity:
    u: np.ndarray
    v: np.ndarray

    def copy(self) -> "StaggeredVelocity":
        return StaggeredVelocity(self.u.copy(), self.v.copy())

    def __add__(self, other):
        return StaggeredVelocity(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return StaggeredVelocity(self.u - other.u, self.v - other.v)

    def __mul__(self, c):
        return StaggeredVelocity(c * self.u, c * self.v)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(np.abs(self.u).max(), np.abs(self.v).max())


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 4 or self.ny < 4:
            raise ValueError(f"nx, ny must be integers >= 4, got {self.nx}, {self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("lx, ly must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def scalar_shape(self):
        return (self.nx + 2, self.ny + 2)

    @property
    def u_shape(self):
        return (self.nx + 1, self.ny + 2)

    @property
    def v_shape(self):
        return (self.nx + 2, self.ny + 1)

    # -- allocation and coordinates ------------------------------------------

    def scalar(self, value: float = 0.0) -> np.ndarray:
        return np.full(self.scalar_shape, float(value))

    def velocity(self) -> StaggeredVelocity:
        return StaggeredVelocity(np.zeros(self.u_shape), np.zeros(self.v_shape))

    def _xc(self):
        return (np.arange(self.nx + 2) - 0.5) * self.hx

    def _yc(self):
        return (np.arange(self.ny + 2) - 0.5) * self.hy

    def cell_mesh(self):
        """Coordinates of all cell centres (ghosts included)."""
        return np.meshgrid(self._xc(), self._yc(), indexing="ij")

    def u_mesh(self):
        return np.meshgrid(np.arange(self.nx + 1) * self.hx, self._yc(), indexing="ij")

    def v_mesh(self):
        return np.meshgrid(self._xc(), np.arange(self.ny + 1) * self.hy, indexing="ij")

    def sample_scalar(self, fn, *args) -> np.ndarray:
        x, y = self.cell_mesh()
        return self.apply_bc_neumann(np.broadcast_to(fn(x, y, *args), x.shape).astype(float))

    def sample_velocity(self, fu, fv, *args) -> StaggeredVelocity:
        xu, yu = self.u_mesh()
        xv, yv = self.v_mesh()
        vel = StaggeredVelocity(
            np.broadcast_to(fu(xu, yu, *args), xu.shape).astype(float),
            np.broadcast_to(fv(xv, yv, *args), xv.shape).astype(float),
        )
        return self.apply_bc_velocity(vel)

    # -- checks ----------------------------------------------------------------

    def check_scalar(self, s: np.ndarray):
        if s.shape != self.scalar_shape:
            raise ValueError(f"scalar field has shape {s.shape}, grid expects {self.scalar_shape}")

    def check_velocity(self, vel: StaggeredVelocity):
        if vel.u.shape != self.u_shape or vel.v.shape != self.v_shape:
            raise ValueError(
                f"velocity has shapes {vel.u.shape}/{vel.v.shape}, "
                f"grid expects {self.u_shape}/{self.v_shape}"
            )

    @staticmethod
    def interior(s: np.ndarray) -> np.ndarray:
        return s[1:-1, 1:-1]

    # -- boundary conditions -------------------------------------------------

    def apply_bc_velocity(self, vel: StaggeredVelocity) -> StaggeredVelocity:
        self.check_velocity(vel)
        u = vel.u.copy()
        v = vel.v.copy()
        u[0, :] = 0.0
        u[-1, :] = 0.0
        v[:, 0] = 0.0
        v[:, -1] = 0.0
        # tangential ghosts: wall value (mean of ghost and first interior) is zero;
        # 0 - x rather than -x so a zero field keeps +0.0 bitwise
        u[:, 0] = 0.0 - u[:, 1]
        u[:, -1] = 0.0 - u[:, -2]
        v[0, :] = 0.0 - v[1, :]
        v[-1, :] = 0.0 - v[-2, :]
        return StaggeredVelocity(u, v)

    def apply_bc_neumann(self, s: np.ndarray) -> np.ndarray:
        self.check_scalar(s)
        s = np.array(s, dtype=float)
        s[0, :] = s[1, :]
        s[-1, :] = s[-2, :]
        s[:, 0] = s[:, 1]
        s[:, -1] = s[:, -2]
        return s

    # -- differential operators ---------------------------------------------

    def divergence(self, vel: StaggeredVelocity) -> np.ndarray:
        self.check_velocity(vel)
        out = self.scalar()
        out[1:-1, 1:-1] = (vel.u[1:, 1:-1] - vel.u[:-1, 1:-1]) / self.hx + (
            vel.v[1:-1, 1:] - vel.v[1:-1, :-1]
        ) / self.hy
        return self.apply_bc_neumann(out)

    def gradient(self, s: np.ndarray) -> StaggeredVelocity:
        self.check_scalar(s)
        g = self.velocity()
        g.u[1:-1, 1:-1] = (s[2:-1, 1:-1] - s[1:-2, 1:-1]) / self.hx
        g.v[1:-1, 1:-1] = (s[1:-1, 2:-1] - s[1:-1, 1:-2]) / self.hy
        return self.apply_bc_velocity(g)

    def laplacian_neumann(self, s: np.ndarray) -> np.ndarray:
        s = self.apply_bc_neumann(s)
        out = self.scalar()
        c = s[1:-1, 1:-1]
        out[1:-1, 1:-1] = (s[2:, 1:-1] - 2.0 * c + s[:-2, 1:-1]) / self.hx**2 + (
            s[1:-1, 2:] - 2.0 * c + s[1:-1, :-2]
        ) / self.hy**2
        return self.apply_bc_neumann(out)

    def laplacian_dirichlet(self, vel: StaggeredVelocity) -> StaggeredVelocity:
        vel = self.apply_bc_velocity(vel)
        out = self.velocity()
        out.u[1:-1, 1:-1] = _lap5(vel.u, self.hx, self.hy)
        out.v[1:-1, 1:-1] = _lap5(vel.v, self.hx, self.hy)
        return self.apply_bc_velocity(out)

    def advect_scalar(self, vel: StaggeredVelocity, s: np.ndarray) -> np.ndarray:
        """Centred u.grad(s): each cell averages face velocity times face gradient.

        Constants are annihilated exactly and <u.grad s, s> = -1/2 <div u, s^2>.
        """
        self.check_velocity(vel)
        s = self.apply_bc_neumann(s)
        out = self.scalar()
        out[1:-1, 1:-1] = _advect_cells(vel.u, vel.v, s, self.hx, self.hy)
        return self.apply_bc_neumann(out)

    def advect_velocity(self, vel: StaggeredVelocity, by: StaggeredVelocity | None = None):
        """Centred (by.grad) vel on both face families; ``by`` defaults to ``vel``."""
        vel = self.apply_bc_velocity(vel)
        by = vel if by is None else self.apply_bc_velocity(by)
        out = self.velocity()
        out.u[1:-1, 1:-1] = _advect_u(by.u, by.v, vel.u, self.hx, self.hy)
        out.v[1:-1, 1:-1] = _advect_v(by.u, by.v, vel.v, self.hx, self.hy)
        return self.apply_bc_velocity(out)

    def capillary_force(self, phase: np.ndarray, lam: float) -> StaggeredVelocity:
        """-lam * lap(phi) * grad(phi) on the faces (lap averaged to the face)."""
        lap = self.laplacian_neumann(phase)
        phase = self.apply_bc_neumann(phase)
        out = self.velocity()
        out.u[1:-1, 1:-1] = (
            -lam
            * 0.5
            * (lap[1:-2, 1:-1] + lap[2:-1, 1:-1])
            * (phase[2:-1, 1:-1] - phase[1:-2, 1:-1])
            / self.hx
        )
        out.v[1:-1, 1:-1] = (
            -lam
            * 0.5
            * (lap[1:-1, 1:-2] + lap[1:-1, 2:-1])
            * (phase[1:-1, 2:-1] - phase[1:-1, 1:-2])
            / self.hy
        )
        return self.apply_bc_velocity(out)

    # -- averaging -----------------------------------------------------------

    def to_faces(self, s: np.ndarray) -> StaggeredVelocity:
        """Arithmetic mean of the two cells adjacent to each interior face."""
        s = self.apply_bc_neumann(s)
        out = self.velocity()
        out.u[1:-1, 1:-1] = 0.5 * (s[1:-2, 1:-1] + s[2:-1, 1:-1])
        out.v[1:-1, 1:-1] = 0.5 * (s[1:-1, 1:-2] + s[1:-1, 2:-1])
        return out

    def speed_squared(self, vel: StaggeredVelocity) -> np.ndarray:
        """|u|^2 at cell centres as the mean of squared face values."""
        self.check_velocity(vel)
        out = self.scalar()
        u2 = vel.u[:, 1:-1] ** 2
        v2 = vel.v[1:-1, :] ** 2
        out[1:-1, 1:-1] = 0.5 * (u2[:-1] + u2[1:]) + 0.5 * (v2[:, :-1] + v2[:, 1:])
        return self.apply_bc_neumann(out)

    # -- inner products and norms -------------------------------------------

    def inner_scalar(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(a[1:-1, 1:-1] * b[1:-1, 1:-1]) * self.cell_area)

    def inner_velocity(self, a: StaggeredVelocity, b: StaggeredVelocity, weight=None) -> float:
        """Face-sum inner product; ``weight`` is an optional face-valued field."""
        au, bu = a.u[:, 1:-1], b.u[:, 1:-1]
        av, bv = a.v[1:-1, :], b.v[1:-1, :]
        if weight is not None:
            au = au * weight.u[:, 1:-1]
            av = av * weight.v[1:-1, :]
        return float((np.sum(au * bu) + np.sum(av * bv)) * self.cell_area)

    def norm_scalar(self, s: np.ndarray) -> float:
        return float(np.sqrt(self.inner_scalar(s, s)))

    def norm_velocity(self, vel: StaggeredVelocity) -> float:
        return float(np.sqrt(self.inner_velocity(vel, vel)))

    def grad_norm_sq_scalar(self, s: np.ndarray) -> float:
        """||grad s||^2 over interior faces, equal to -<lap_N s, s>."""
        g = self.gradient(s)
        return self.inner_velocity(g, g)

    def grad_norm_sq_velocity(self, vel: StaggeredVelocity) -> float:
        """Dirichlet form -<lap_D u, u>, the discrete ||grad u||^2 for no-slip fields."""
        vel = self.apply_bc_velocity(vel)
        return -self.inner_velocity(self.laplacian_dirichlet(vel), vel)


def _lap5(a: np.ndarray, hx: float, hy: float) -> np.ndarray:
    c = a[1:-1, 1:-1]
    return (a[2:, 1:-1] - 2.0 * c + a[:-2, 1:-1]) / hx**2 + (a[1:-1, 2:] - 2.0 * c + a[1:-1, :-2]) / hy**2


def _advect_cells(u, v, s, hx, hy):
    c = s[1:-1, 1:-1]
    return 0.5 * (
        u[1:, 1:-1] * (s[2:, 1:-1] - c) + u[:-1, 1:-1] * (c - s[:-2, 1:-1])
    ) / hx + 0.5 * (v[1:-1, 1:] * (s[1:-1, 2:] - c) + v[1:-1, :-1] * (c - s[1:-1, :-2])) / hy


def _advect_u(bu, bv, q, hx, hy):
    """(b.grad) q for q living on u-faces, interior faces only."""
    ue = 0.5 * (bu[1:-1, 1:-1] + bu[2:, 1:-1])
    uw = 0.5 * (bu[:-2, 1:-1] + bu[1:-1, 1:-1])
    vn = 0.5 * (bv[1:-2, 1:] + bv[2:-1, 1:])
    vs = 0.5 * (bv[1:-2, :-1] + bv[2:-1, :-1])
    c = q[1:-1, 1:-1]
    return 0.5 * (ue * (q[2:, 1:-1] - c) + uw * (c - q[:-2, 1:-1])) / hx + 0.5 * (
        vn * (q[1:-1, 2:] - c) + vs * (c - q[1:-1, :-2])
    ) / hy


def _advect_v(bu, bv, q, hx, hy):
    """(b.grad) q for q living on v-faces, interior faces only."""
    ue = 0.5 * (bu[1:, 1:-2] + bu[1:, 2:-1])
    uw = 0.5 * (bu[:-1, 1:-2] + bu[:-1, 2:-1])
    vn = 0.5 * (bv[1:-1, 1:-1] + bv[1:-1, 2:])
    vs = 0.5 * (bv[1:-1, :-2] + bv[1:-1, 1:-1])
    c = q[1:-1, 1:-1]
    return 0.5 * (ue * (q[2:, 1:-1] - c) + uw * (c - q[:-2, 1:-1])) / hx + 0.5 * (
        vn * (q[1:-1, 2:] - c) + vs * (c - q[1:-1, :-2])
    ) / hy


@dataclass
class SimState:
    """One time level: velocity, pressure, phase field and time."""

    grid: Grid
    velocity: StaggeredVelocity
    pressure: np.ndarray
    phase: np.ndarray
    time: float = 0.0
    extras: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.grid.check_velocity(self.velocity)
        self.grid.check_scalar(self.pressure)
        self.grid.check_scalar(self.phase)
        if not self.time >= 0:
            raise ValueError("time must be >= 0")

    def copy(self) -> "SimState":
        return SimState(self.grid, self.velocity.copy(), self.pressure.copy(), self.phase.copy(), self.time)

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.velocity.u).all()
            and np.isfinite(self.velocity.v).all()
            and np.isfinite(self.pressure).all()
            and np.isfinite(self.phase).all()
        )
