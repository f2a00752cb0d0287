"""Manufactured solutions, convergence studies and the shifted-formulation check.

Every case uses the same closed-form family on [0, lx] x [0, ly], with
X = pi x / lx, Y = pi y / ly and kx = pi / lx, ky = pi / ly:

    psi = U g(t) sin^2 X sin^2 Y,     (u, v) = (psi_y, -psi_x)
    p   = P g(t) cos X cos Y
    phi = c0 + A h(t) cos X cos Y

so u vanishes on the walls, phi has zero normal derivative and div u = 0
identically. Forcing terms are the residuals of the model equations.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import constitutive as cl
from .constitutive import Params
from .grid import Grid, SimState, StaggeredVelocity
from .stepper import ORIGINAL, SHIFTED, StepperConfig, step


def _const(t):
    return 1.0 + 0.0 * t


def _zero(t):
    return 0.0 * t


def _exp(t):
    return np.exp(-t)


def _exp_dt(t):
    return -np.exp(-t)


def _wave(t):
    return np.cos(2.0 * np.pi * t)


def _wave_dt(t):
    return -2.0 * np.pi * np.sin(2.0 * np.pi * t)


@dataclass(frozen=True)
class ManufacturedCase:
    """Amplitudes and time profiles of the closed-form family above.

    ``advance_phase`` / ``advance_flow`` select which sub-systems the stepper
    evolves; a frozen sub-system keeps its initial (exact) values.
    """

    name: str
    U: float = 0.0
    P: float = 0.0
    A: float = 0.0
    c0: float = 0.0
    g: Callable = _const
    dg: Callable = _zero
    h: Callable = _const
    dh: Callable = _zero
    advance_phase: bool = True
    advance_flow: bool = True

    # -- analytic fields ---------------------------------------------------

    def velocity(self, x, y, t, lx=1.0, ly=1.0):
        """u, v and their first and second derivatives as a dict."""
        kx, ky = math.pi / lx, math.pi / ly
        X, Y = kx * x, ky * y
        a = self.U * self.g(t)
        da = self.U * self.dg(t)
        s2x, s2y = np.sin(2 * X), np.sin(2 * Y)
        c2x, c2y = np.cos(2 * X), np.cos(2 * Y)
        sqx, sqy = np.sin(X) ** 2, np.sin(Y) ** 2
        return {
            "u": a * ky * sqx * s2y,
            "u_t": da * ky * sqx * s2y,
            "u_x": a * ky * kx * s2x * s2y,
            "u_y": a * 2 * ky**2 * sqx * c2y,
            "lap_u": a * ky * (2 * kx**2 * c2x * s2y - 4 * ky**2 * sqx * s2y),
            "v": -a * kx * s2x * sqy,
            "v_t": -da * kx * s2x * sqy,
            "v_x": -a * 2 * kx**2 * c2x * sqy,
            "v_y": -a * kx * ky * s2x * s2y,
            "lap_v": a * kx * (4 * kx**2 * s2x * sqy - 2 * ky**2 * s2x * c2y),
        }

    def pressure(self, x, y, t, lx=1.0, ly=1.0):
        kx, ky = math.pi / lx, math.pi / ly
        b = self.P * self.g(t)
        return {
            "p": b * np.cos(kx * x) * np.cos(ky * y),
            "p_x": -b * kx * np.sin(kx * x) * np.cos(ky * y),
            "p_y": -b * ky * np.cos(kx * x) * np.sin(ky * y),
        }

    def phase(self, x, y, t, lx=1.0, ly=1.0):
        kx, ky = math.pi / lx, math.pi / ly
        a = self.A * self.h(t)
        cc = np.cos(kx * x) * np.cos(ky * y)
        return {
            "phi": self.c0 + a * cc,
            "phi_t": self.A * self.dh(t) * cc,
            "phi_x": -a * kx * np.sin(kx * x) * np.cos(ky * y),
            "phi_y": -a * ky * np.cos(kx * x) * np.sin(ky * y),
            "lap_phi": -(kx**2 + ky**2) * a * cc,
        }

    # -- sampling --------------------------------------------------------------

    def state(self, grid: Grid, t: float = 0.0) -> SimState:
        lx, ly = grid.lx, grid.ly
        vel = grid.sample_velocity(
            lambda x, y: self.velocity(x, y, t, lx, ly)["u"], lambda x, y: self.velocity(x, y, t, lx, ly)["v"]
        )
        p = grid.sample_scalar(lambda x, y: self.pressure(x, y, t, lx, ly)["p"])
        phi = grid.sample_scalar(lambda x, y: self.phase(x, y, t, lx, ly)["phi"])
        return SimState(grid, vel, p, phi, t)

    def momentum_residual(self, x, y, t, params: Params, component: str, lx=1.0, ly=1.0):
        """rho (u_t + u.grad u) + grad p - mu lap u + lam lap(phi) grad(phi) for one component."""
        vel = self.velocity(x, y, t, lx, ly)
        pr = self.pressure(x, y, t, lx, ly)
        ph = self.phase(x, y, t, lx, ly)
        c = component
        rho = cl.rho(ph["phi"], params)
        transport = vel[f"{c}_t"] + vel["u"] * vel[f"{c}_x"] + vel["v"] * vel[f"{c}_y"]
        axis = "x" if c == "u" else "y"
        return (
            rho * transport
            + pr[f"p_{axis}"]
            - params.mu * vel[f"lap_{c}"]
            + params.lam * ph["lap_phi"] * ph[f"phi_{axis}"]
        )

    def phase_residual(self, x, y, t, params: Params, lx=1.0, ly=1.0):
        """phi_t + u.grad phi - gamma (lam lap phi - lam f'(phi) - rho'(phi) |u|^2 / 2)."""
        vel = self.velocity(x, y, t, lx, ly)
        ph = self.phase(x, y, t, lx, ly)
        speed2 = vel["u"] ** 2 + vel["v"] ** 2
        return (
            ph["phi_t"]
            + vel["u"] * ph["phi_x"]
            + vel["v"] * ph["phi_y"]
            - params.gamma
            * (
                params.lam * ph["lap_phi"]
                - params.lam * cl.f_prime(ph["phi"], params)
                - cl.rho_prime(ph["phi"], params) * speed2 / 2.0
            )
        )


PHASE_DIFFUSION = ManufacturedCase("phase_diffusion", A=0.5, h=_exp, dh=_exp_dt, advance_flow=False)
STOKES = ManufacturedCase("stokes", U=0.5, P=1.0, A=0.5, advance_phase=False)
SWIRL = ManufacturedCase("swirl", U=0.5, P=0.5, A=0.5, g=_wave, dg=_wave_dt, h=_wave, dh=_wave_dt)
REST = ManufacturedCase("rest", c0=1.0)
CASES = {c.name: c for c in (PHASE_DIFFUSION, STOKES, SWIRL, REST)}


def mms_forcing(case: ManufacturedCase, grid: Grid, params: Params, t: float):
    """Momentum forcing on the faces and phase forcing at the cell centres."""
    lx, ly = grid.lx, grid.ly
    fu = grid.velocity()
    xu, yu = grid.u_mesh()
    xv, yv = grid.v_mesh()
    fu.u[1:-1, 1:-1] = case.momentum_residual(xu, yu, t, params, "u", lx, ly)[1:-1, 1:-1]
    fu.v[1:-1, 1:-1] = case.momentum_residual(xv, yv, t, params, "v", lx, ly)[1:-1, 1:-1]
    x, y = grid.cell_mesh()
    fphi = grid.apply_bc_neumann(np.asarray(case.phase_residual(x, y, t, params, lx, ly), dtype=float))
    return fu, fphi


# -- convergence -------------------------------------------------------------------


@dataclass
class ConvergenceRow:
    n: int
    dt: float
    steps: int
    err_u_l2: float
    err_u_inf: float
    err_phi_l2: float
    err_phi_inf: float


@dataclass
class OrderReport:
    case: str
    rows: list
    spatial_order_phi: float
    spatial_order_u: float
    temporal_order_phi: float
    temporal_order_u: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case", "n", "dt", "steps", "err_u_l2", "err_u_inf", "err_phi_l2", "err_phi_inf"])
        for r in self.rows:
            w.writerow([self.case, r.n, repr(r.dt), r.steps] + [repr(v) for v in
                       (r.err_u_l2, r.err_u_inf, r.err_phi_l2, r.err_phi_inf)])
        w.writerow([])
        w.writerow(["order", "spatial_phi", "spatial_u", "temporal_phi", "temporal_u"])
        w.writerow(["", self.spatial_order_phi, self.spatial_order_u, self.temporal_order_phi, self.temporal_order_u])
        return buf.getvalue()


def solution_error(case: ManufacturedCase, state: SimState, t: float):
    """(L2 u, Linf u, L2 phi, Linf phi) errors against the exact fields at time ``t``."""
    grid = state.grid
    exact = case.state(grid, t)
    du = StaggeredVelocity(state.velocity.u - exact.velocity.u, state.velocity.v - exact.velocity.v)
    du = grid.apply_bc_velocity(du)
    dphi = grid.interior(state.phase) - grid.interior(exact.phase)
    inf_u = max(np.abs(du.u[1:-1, 1:-1]).max(), np.abs(du.v[1:-1, 1:-1]).max())
    return (
        grid.norm_velocity(du),
        float(inf_u),
        float(np.sqrt(np.sum(dphi**2) * grid.cell_area)),
        float(np.abs(dphi).max()),
    )


def run_case(case: ManufacturedCase, grid: Grid, cfg: StepperConfig, params: Params, t_end: float) -> SimState:
    steps = int(round(t_end / cfg.dt))
    if steps < 1 or abs(steps * cfg.dt - t_end) > 1e-9 * t_end:
        raise ValueError(f"t_end={t_end} is not a whole number of steps of dt={cfg.dt}")
    state = case.state(grid, 0.0)

    def forcing(t):
        return mms_forcing(case, grid, params, t)

    for k in range(steps):
        state, _ = step(state, cfg, params, forcing=forcing,
                        advance_phase=case.advance_phase, advance_flow=case.advance_flow)
        # keep the clock exact so forcing is sampled at k dt
        state.time = (k + 1) * cfg.dt
    return state


def fitted_order(x: Sequence[float], err: Sequence[float]) -> float:
    """Slope of log(err) against log(x); nan when it is undefined."""
    x, err = np.asarray(x, float), np.asarray(err, float)
    if len(set(x.tolist())) < 2 or not (err > 0).all():
        return math.nan
    return float(np.polyfit(np.log(x), np.log(err), 1)[0])


def convergence_study(
    case: ManufacturedCase,
    grids: Sequence[int],
    dts: Sequence[float],
    cfg: StepperConfig,
    params: Params,
    t_end: float,
    lx: float = 1.0,
    ly: float = 1.0,
) -> OrderReport:
    """Errors at ``t_end`` for each (n, dt) pair; a length-one list is broadcast.

    Spatial orders are fitted against h = lx / n, temporal orders against dt.
    """
    grids, dts = list(grids), list(dts)
    if len(grids) == 1:
        grids = grids * len(dts)
    if len(dts) == 1:
        dts = dts * len(grids)
    if len(grids) != len(dts):
        raise ValueError("grids and dts must have equal length or length one")
    if len(grids) < 3:
        raise ValueError("a convergence study needs at least three runs")
    rows = []
    for n, dt in zip(grids, dts):
        grid = Grid(n, n, lx, ly)
        run_cfg = replace(cfg, dt=dt)
        state = run_case(case, grid, run_cfg, params, t_end)
        rows.append(ConvergenceRow(n, dt, int(round(t_end / dt)), *solution_error(case, state, t_end)))
    hs = [lx / r.n for r in rows]
    varies_h = len(set(grids)) > 1
    varies_dt = len(set(dts)) > 1
    err_u = [r.err_u_l2 for r in rows]
    err_phi = [r.err_phi_l2 for r in rows]
    return OrderReport(
        case.name,
        rows,
        fitted_order(hs, err_phi) if varies_h else math.nan,
        fitted_order(hs, err_u) if varies_h else math.nan,
        fitted_order(dts, err_phi) if varies_dt and not varies_h else math.nan,
        fitted_order(dts, err_u) if varies_dt and not varies_h else math.nan,
    )


# -- shifted formulation ----------------------------------------------------------------


def shift_state(state: SimState, params: Params) -> SimState:
    """Same state with phi replaced by the perturbation varphi = phi -+ 1."""
    out = state.copy()
    out.phase = state.phase - params.sign
    return out


def perturbation_equivalence(state: SimState, cfg: StepperConfig, params: Params, n_steps: int = 1) -> float:
    """Largest relative discrepancy between the original and shifted update paths.

    Both trajectories advance ``n_steps``; the phase difference is scaled by
    max |phi| and the velocity difference by max |u| of the original path.
    """
    phi = state.grid.interior(state.phase)
    if np.abs(phi - params.sign).max() > 0.5:
        raise ValueError("phase must lie within 0.5 of the selected equilibrium")
    a = state.copy()
    b = shift_state(state, params)
    worst = 0.0
    for _ in range(n_steps):
        a, _ = step(a, cfg, params, ORIGINAL)
        b, _ = step(b, cfg, params, SHIFTED)
        dphi = np.abs(a.phase - (b.phase + params.sign)).max()
        worst = max(worst, dphi / max(np.abs(a.phase).max(), 1e-300))
        du = (a.velocity - b.velocity).max_abs()
        scale = a.velocity.max_abs()
        if du > 0:
            worst = max(worst, du / scale if scale > 0 else math.inf)
    return float(worst)


# -- shipped studies ----------------------------------------------------------------------


def _diffusive_dts(grids, t_end):
    # dt proportional to h^2 so the time error shrinks with the space error
    return [t_end / (n * n // 16) for n in grids]


def spatial_study(params: Params, cfg: StepperConfig | None = None, grids=(32, 64, 128)) -> OrderReport:
    """Phase-diffusion case refined in space with dt ~ h^2, to t = 0.1."""
    t_end = 0.1
    return convergence_study(PHASE_DIFFUSION, grids, _diffusive_dts(grids, t_end), cfg or StepperConfig(), params, t_end)


def temporal_study(params: Params, cfg: StepperConfig | None = None, n: int = 64, dt: float = 0.01) -> OrderReport:
    """Swirl case on a fixed grid with dt, dt/2, dt/4, to t = 0.5."""
    return convergence_study(SWIRL, [n], [dt, dt / 2, dt / 4], cfg or StepperConfig(), params, 0.5)
