"""Krylov solvers for 5-point stencil systems with diagonal (Jacobi) preconditioning.

Every linear system of the stepper is a 5-point stencil on a rectangular
block of unknowns. Boundary conditions are folded into the coefficients
beforehand, so couplings leaving the block are simply dropped.

Convergence is declared when the max-norm residual satisfies
``||b - A x||_inf <= tol * ||b||_inf``. The max norm makes the projection
contract (pointwise divergence) follow directly from the solver tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit


class SolverError(RuntimeError):
    """Raised when an iterative solve misses its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class Stencil:
    """Coefficients of ``(A x)[i,j] = c x[i,j] + w x[i-1,j] + e x[i+1,j] + s x[i,j-1] + n x[i,j+1]``."""

    center: np.ndarray
    west: np.ndarray
    east: np.ndarray
    south: np.ndarray
    north: np.ndarray

    def __post_init__(self):
        arrays = [np.ascontiguousarray(a, dtype=float) for a in
                  (self.center, self.west, self.east, self.south, self.north)]
        shape = arrays[0].shape
        if any(a.shape != shape for a in arrays) or len(shape) != 2:
            raise ValueError("stencil coefficient arrays must share one 2D shape")
        # couplings leaving the block are meaningless
        arrays[1][0, :] = 0.0
        arrays[2][-1, :] = 0.0
        arrays[3][:, 0] = 0.0
        arrays[4][:, -1] = 0.0
        self.center, self.west, self.east, self.south, self.north = arrays

    @classmethod
    def identity(cls, shape) -> "Stencil":
        z = np.zeros(shape)
        return cls(np.ones(shape), z, z, z, z)

    @property
    def shape(self):
        return self.center.shape

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(self.shape)
        _stencil_apply(self.center, self.west, self.east, self.south, self.north,
                       np.ascontiguousarray(x, dtype=float).reshape(self.shape), out)
        return out


@dataclass
class LinearSystem:
    """Operator descriptor for :func:`solve_linear`.

    ``exact_apply`` optionally evaluates the operator from the original
    finite-difference formulas (used for the initial residual, so that exact
    fixed points are recognised without round-off from folded coefficients).
    ``singular`` marks a pure Neumann operator whose null space is the
    constants; right-hand side and solution are then made mean-free.
    """

    stencil: Stencil
    symmetric: bool = False
    singular: bool = False
    exact_apply: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass
class SolveStats:
    iterations: int = 0
    residual: float = 0.0


def solve_linear(system: LinearSystem, rhs, tol: float, max_iter: int, x0=None, stats=None):
    """Solve ``A x = rhs``; preconditioned CG if symmetric, else BiCGSTAB.

    If the initial guess already satisfies the tolerance it is returned
    unchanged, so exact fixed points survive bitwise.
    """
    st = system.stencil
    b = np.array(rhs, dtype=float).reshape(st.shape)
    if system.singular:
        b -= b.mean()
    if stats is None:
        stats = SolveStats()
    bnorm = np.abs(b).max()
    if bnorm == 0.0:
        stats.iterations, stats.residual = 0, 0.0
        return np.zeros(st.shape)
    x = np.zeros(st.shape) if x0 is None else np.array(x0, dtype=float).reshape(st.shape)
    apply = system.exact_apply or st.apply
    r = b - apply(x)
    if system.singular:
        r -= r.mean()
    target = tol * bnorm
    if np.abs(r).max() <= target:
        stats.iterations, stats.residual = 0, float(np.abs(r).max() / bnorm)
        return x - x.mean() if system.singular else x
    inv_diag = 1.0 / st.center
    args = (st.center, st.west, st.east, st.south, st.north, b, x, inv_diag, target, max_iter)
    if system.symmetric:
        it, rmax = _pcg(*args, system.singular)
    else:
        it, rmax = _bicgstab(*args)
    res = float(rmax / bnorm)
    stats.iterations, stats.residual = it, res
    if not res <= tol:
        raise SolverError("linear solver did not converge", res, it)
    return x - x.mean() if system.singular else x


# -- compiled kernels --------------------------------------------------------------

# reassociation lets reductions vectorise; nan/inf semantics are untouched
_FAST = {"reassoc", "contract"}


@njit(cache=True, fastmath=_FAST)
def _stencil_apply(c, w, e, s, n, x, out):
    mx, my = x.shape
    for i in range(mx):
        # west/east couplings at the block edges are zero, any row will do
        xm = x[max(i - 1, 0)]
        xp = x[min(i + 1, mx - 1)]
        xc = x[i]
        ci, wi, ei, si, ni, oi = c[i], w[i], e[i], s[i], n[i], out[i]
        oi[0] = ci[0] * xc[0] + wi[0] * xm[0] + ei[0] * xp[0] + ni[0] * xc[1]
        for j in range(1, my - 1):
            oi[j] = ci[j] * xc[j] + wi[j] * xm[j] + ei[j] * xp[j] + si[j] * xc[j - 1] + ni[j] * xc[j + 1]
        k = my - 1
        oi[k] = ci[k] * xc[k] + wi[k] * xm[k] + ei[k] * xp[k] + si[k] * xc[k - 1]


@njit(cache=True, fastmath=_FAST)
def _dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            acc += a[i, j] * b[i, j]
    return acc


@njit(cache=True)
def _absmax(a):
    m = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            v = abs(a[i, j])
            if v > m:
                m = v
    return m


@njit(cache=True)
def _remove_mean(a):
    a -= a.mean()


@njit(cache=True, fastmath=_FAST)
def _residual(c, w, e, s, n, b, x, r, singular):
    _stencil_apply(c, w, e, s, n, x, r)
    for i in range(r.shape[0]):
        for j in range(r.shape[1]):
            r[i, j] = b[i, j] - r[i, j]
    if singular:
        _remove_mean(r)


@njit(cache=True, fastmath=_FAST)
def _pcg(c, w, e, s, n, b, x, inv_diag, target, max_iter, singular):
    mx, my = b.shape
    size = mx * my
    r = np.empty_like(b)
    _residual(c, w, e, s, n, b, x, r, singular)
    z = inv_diag * r
    p = z.copy()
    ap = np.empty_like(b)
    rz = _dot(r, z)
    for it in range(1, max_iter + 1):
        _stencil_apply(c, w, e, s, n, p, ap)
        pap = _dot(p, ap)
        if pap <= 0.0:
            break
        alpha = rz / pap
        rsum = 0.0
        for i in range(mx):
            for j in range(my):
                x[i, j] += alpha * p[i, j]
                r[i, j] -= alpha * ap[i, j]
                rsum += r[i, j]
        rmean = rsum / size if singular else 0.0
        rmax = 0.0
        rz_new = 0.0
        for i in range(mx):
            for j in range(my):
                rij = r[i, j] - rmean
                r[i, j] = rij
                rmax = max(rmax, abs(rij))
                zij = inv_diag[i, j] * rij
                z[i, j] = zij
                rz_new += rij * zij
        if rmax <= target:
            # the recursive residual drifts; confirm with the true one
            _residual(c, w, e, s, n, b, x, r, singular)
            if _absmax(r) <= target:
                return it, _absmax(r)
            for i in range(mx):
                for j in range(my):
                    z[i, j] = inv_diag[i, j] * r[i, j]
            rz_new = _dot(r, z)
        beta = rz_new / rz
        for i in range(mx):
            for j in range(my):
                p[i, j] = z[i, j] + beta * p[i, j]
        rz = rz_new
    _residual(c, w, e, s, n, b, x, r, singular)
    return max_iter, _absmax(r)


@njit(cache=True, fastmath=_FAST)
def _bicgstab(c, w, e, s, n, b, x, inv_diag, target, max_iter):
    mx, my = b.shape
    r = np.empty_like(b)
    _residual(c, w, e, s, n, b, x, r, False)
    r_hat = r.copy()
    rho_old = 1.0
    alpha = 1.0
    omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    p_hat = np.empty_like(b)
    s_hat = np.empty_like(b)
    sv = np.empty_like(b)
    t = np.empty_like(b)
    for it in range(1, max_iter + 1):
        rho_new = _dot(r_hat, r)
        if rho_new == 0.0:
            # breakdown: restart the recurrence from the current iterate
            r_hat[:] = r
            rho_new = _dot(r_hat, r)
            p[:] = 0.0
            v[:] = 0.0
            rho_old = 1.0
            alpha = 1.0
            omega = 1.0
        beta = (rho_new / rho_old) * (alpha / omega)
        for i in range(mx):
            for j in range(my):
                p[i, j] = r[i, j] + beta * (p[i, j] - omega * v[i, j])
                p_hat[i, j] = inv_diag[i, j] * p[i, j]
        _stencil_apply(c, w, e, s, n, p_hat, v)
        alpha = rho_new / _dot(r_hat, v)
        smax = 0.0
        for i in range(mx):
            for j in range(my):
                sij = r[i, j] - alpha * v[i, j]
                sv[i, j] = sij
                s_hat[i, j] = inv_diag[i, j] * sij
                smax = max(smax, abs(sij))
        if smax <= target:
            for i in range(mx):
                for j in range(my):
                    x[i, j] += alpha * p_hat[i, j]
            _residual(c, w, e, s, n, b, x, r, False)
            if _absmax(r) <= target:
                return it, _absmax(r)
            r_hat[:] = r
            p[:] = 0.0
            v[:] = 0.0
            rho_old = 1.0
            alpha = 1.0
            omega = 1.0
            continue
        _stencil_apply(c, w, e, s, n, s_hat, t)
        tt = _dot(t, t)
        omega = _dot(t, sv) / tt if tt > 0.0 else 0.0
        rmax = 0.0
        for i in range(mx):
            for j in range(my):
                x[i, j] += alpha * p_hat[i, j] + omega * s_hat[i, j]
                rij = sv[i, j] - omega * t[i, j]
                r[i, j] = rij
                rmax = max(rmax, abs(rij))
        if rmax <= target:
            _residual(c, w, e, s, n, b, x, r, False)
            if _absmax(r) <= target:
                return it, _absmax(r)
        if omega == 0.0:
            break
        rho_old = rho_new
    _residual(c, w, e, s, n, b, x, r, False)
    return max_iter, _absmax(r)
