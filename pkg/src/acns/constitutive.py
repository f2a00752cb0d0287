"""Scalar constitutive laws: parabolic density, double-well potential and the
shifted counterparts used near the pure-phase equilibria phi = +1 / -1.

All functions accept scalars or numpy arrays and are defined for every real
phi; nothing is clamped, so overshoot past [-1, 1] stays well defined.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BRANCHES = ("plus", "minus")


@dataclass(frozen=True)
class Params:
    """Physical coefficients of the two-phase model.

    ``branch`` selects the equilibrium used by the shifted formulation:
    ``"plus"`` for phi close to +1, ``"minus"`` for phi close to -1.
    ``kappa`` weights the higher-order terms of the dissipation functionals.
    """

    rho1: float = 1.0
    rho2: float = 3.0
    mu: float = 1.0
    lam: float = 0.01
    gamma: float = 1.0
    epsilon: float = 0.1
    branch: str = "plus"
    kappa: float = 1e-2

    def __post_init__(self):
        for name in ("rho1", "rho2", "mu", "lam", "gamma", "epsilon", "kappa"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not self.rho1 < self.rho2:
            raise ValueError("rho1 < rho2 required")
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}, got {self.branch!r}")

    @property
    def sign(self) -> int:
        """+1 for the plus branch, -1 for the minus branch."""
        return 1 if self.branch == "plus" else -1

    @property
    def rho_min(self) -> float:
        return self.rho1 * self.rho2 / (self.rho1 + self.rho2)

    @property
    def rho_max(self) -> float:
        # max of the parabola on [-1, 1]; its vertex lies left of 0, so the max is rho(1)
        return self.rho2

    @property
    def phi_star(self) -> float:
        """Minimiser of rho."""
        return -(self.rho2 - self.rho1) / (self.rho2 + self.rho1)

    @property
    def damping(self) -> float:
        """Linear damping rate 2*gamma*lam/eps^2 released by the shift phi = varphi +- 1."""
        return 2.0 * self.gamma * self.lam / self.epsilon**2


def rho(phi, params: Params):
    return 0.25 * params.rho1 * (phi - 1.0) ** 2 + 0.25 * params.rho2 * (phi + 1.0) ** 2


def rho_completed_square(phi, params: Params):
    """Same parabola written around its vertex; used for bounds checks."""
    r1, r2 = params.rho1, params.rho2
    return 0.25 * (r1 + r2) * (phi + (r2 - r1) / (r2 + r1)) ** 2 + r1 * r2 / (r1 + r2)


def rho_prime(phi, params: Params):
    return 0.5 * params.rho1 * (phi - 1.0) + 0.5 * params.rho2 * (phi + 1.0)


def f(phi, params: Params):
    return (phi * phi - 1.0) ** 2 / (4.0 * params.epsilon**2)


def f_prime(phi, params: Params):
    return (phi * phi - 1.0) * phi / params.epsilon**2


def h(varphi, params: Params):
    """Nonlinear remainder of f' after the shift: f'(varphi +- 1) = 2 varphi/eps^2 + h."""
    return (varphi**3 + params.sign * 3.0 * varphi**2) / params.epsilon**2


def varrho(varphi, params: Params):
    """Density as a function of the perturbation, rho(varphi +- 1), in expanded form."""
    if params.sign > 0:
        return 0.25 * params.rho1 * varphi**2 + 0.25 * params.rho2 * (varphi + 2.0) ** 2
    return 0.25 * params.rho1 * (varphi - 2.0) ** 2 + 0.25 * params.rho2 * varphi**2


def varrho_prime(varphi, params: Params):
    if params.sign > 0:
        return 0.5 * params.rho1 * varphi + 0.5 * params.rho2 * (varphi + 2.0)
    return 0.5 * params.rho1 * (varphi - 2.0) + 0.5 * params.rho2 * varphi
