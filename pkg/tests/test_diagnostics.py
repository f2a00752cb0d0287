import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acns import diagnostics as dg
from acns.constitutive import Params
from acns.grid import Grid, SimState
from acns.initial import bubble, equilibrium, perturbed_equilibrium
from acns.stepper import StepperConfig, step
from conftest import random_solenoidal, rest_state


def test_total_energy_examples():
    g = Grid(16, 16, 2.0, 1.0)
    p = Params()
    for sign in (1, -1):
        assert dg.total_energy(equilibrium(g, sign), p) == 0.0
    s = rest_state(g, g.scalar(0.0))
    assert dg.total_energy(s, p) == pytest.approx(p.lam * g.area / (4 * p.epsilon**2), rel=1e-14)


def test_total_energy_kinetic_part():
    g = Grid(16, 16)
    p = Params()
    s = equilibrium(g, 1)
    s.velocity = random_solenoidal(g, np.random.default_rng(0))
    # rho = rho2 everywhere on the plus equilibrium
    assert dg.total_energy(s, p) == pytest.approx(0.5 * p.rho2 * g.norm_velocity(s.velocity) ** 2, rel=1e-13)


def test_total_energy_interface_converges():
    # free energy of phi = cos(pi x) against the exact integral
    p = Params(lam=1.0, epsilon=1.0)
    exact = 0.5 * 0.5 * math.pi**2 + (3.0 / 8.0 - 1.0 + 1.0) / 4.0
    errs = []
    for n in (16, 32, 64):
        g = Grid(n, n)
        s = rest_state(g, g.sample_scalar(lambda x, y: np.cos(np.pi * x)))
        errs.append(abs(dg.total_energy(s, p) - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert (orders > 1.7).all()


def test_dissipation_examples():
    g = Grid(8, 8)
    p = Params(gamma=1.0, lam=1.0, epsilon=1.0)
    assert dg.dissipation_rate(rest_state(g, g.scalar(0.5)), p) == pytest.approx(0.375**2 * g.area, rel=1e-14)
    assert dg.dissipation_rate(equilibrium(g, -1), p) == 0.0


def test_functional_examples():
    g = Grid(16, 16)
    p = Params()
    plus = equilibrium(g, 1)
    assert dg.functional_E0(plus, p) == pytest.approx(g.area, rel=1e-14)
    assert dg.functional_global_E(plus, p) == 0.0
    assert dg.functional_E0(rest_state(g, g.scalar(0.0)), p) == 0.0
    assert dg.global_weights(Params(gamma=1.0, lam=1.0, epsilon=1.0)) == (3.0, 4.0, 3.0)


def test_global_energy_homogeneous_of_degree_two():
    g = Grid(16, 16)
    p = Params(branch="minus")
    s = perturbed_equilibrium(g, -1, 0.1)
    varphi = s.phase - p.sign
    doubled = rest_state(g, p.sign + 2.0 * varphi)
    # density weight only touches u, which is zero
    assert dg.functional_global_E(doubled, p) == pytest.approx(4.0 * dg.functional_global_E(s, p), rel=1e-12)


def test_global_energy_matches_weighted_norms():
    g = Grid(16, 16)
    p = Params(gamma=0.5, lam=0.2, epsilon=0.3)
    s = perturbed_equilibrium(g, 1, 0.2)
    v = g.apply_bc_neumann(s.phase - 1.0)
    mu0, mu1, _ = dg.global_weights(p)
    gl = p.gamma * p.lam
    lap = g.laplacian_neumann(v)
    expected = mu0 * g.norm_scalar(v) ** 2 + mu1 * g.grad_norm_sq_scalar(v) + gl * g.norm_scalar(lap) ** 2
    assert dg.functional_global_E(s, p) == pytest.approx(expected, rel=1e-13)


def test_insufficient_history():
    g = Grid(8, 8)
    p = Params()
    s = equilibrium(g, 1)
    with pytest.raises(dg.InsufficientHistoryError):
        dg.functional_D0(s, [], p)
    with pytest.raises(dg.InsufficientHistoryError):
        dg.functional_E1(s, [], p)
    with pytest.raises(dg.InsufficientHistoryError):
        dg.energy_balance_audit([s], p)


def test_functionals_with_history_and_report():
    g = Grid(16, 16)
    p = Params()
    cfg = StepperConfig(dt=1e-3)
    s0 = bubble(g, 0.3, 0.1)
    s1, _ = step(s0, cfg, p)
    s2, _ = step(s1, cfg, p)
    assert dg.functional_D0(s2, [s0, s1], p) > 0
    assert dg.functional_E1(s2, [s1], p) > 0
    assert dg.functional_D1(s2, [s0, s1], p) > 0
    main, kappa = dg.functional_D_parts(s2, [s1], p)
    assert main > 0 and kappa > 0
    rep = dg.energy_report(s1, p, [s0])
    assert math.isnan(rep.d1) and not math.isnan(rep.d0) and not math.isnan(rep.e1)
    assert rep.div_max <= 1e-6
    rep0 = dg.energy_report(s0, p)
    assert math.isnan(rep0.d0) and math.isnan(rep0.e1)


def test_audit_examples():
    g = Grid(16, 16)
    p = Params()
    eq = equilibrium(g, 1)
    hist = [eq] + [SimState(g, eq.velocity, eq.pressure, eq.phase, t) for t in (0.1, 0.2)]
    series = dg.energy_balance_audit(hist, p)
    assert (series.arrays()[1] == 0).all()
    # a frozen non-equilibrium history has residual exactly D
    b = bubble(g, 0.3, 0.1)
    frozen = [b, SimState(g, b.velocity, b.pressure, b.phase, 0.5)]
    assert dg.energy_balance_audit(frozen, p).values[0] == dg.dissipation_rate(b, p)


def test_audit_rejects_nonuniform_history():
    g = Grid(8, 8)
    p = Params()
    eq = equilibrium(g, 1)
    hist = [SimState(g, eq.velocity, eq.pressure, eq.phase, t) for t in (0.0, 0.1, 0.3)]
    with pytest.raises(ValueError):
        dg.energy_balance_audit(hist, p)


def test_monitors_and_poincare():
    g = Grid(32, 32)
    assert math.isnan(dg.monitors(equilibrium(g, 1))[3])
    ref = dg.poincare_reference(g)
    assert ref <= g.lx / math.pi
    assert ref == pytest.approx(1.0 / (math.pi * math.sqrt(2.0)), rel=1e-2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_poincare_bound_random_fields(seed):
    g = Grid(24, 24)
    vel = random_solenoidal(g, np.random.default_rng(seed))
    assert dg.poincare_ratio(g, vel) <= dg.poincare_reference(g) * (1 + 1e-9)


def test_time_series_validation():
    ts = dg.TimeSeries([0.0, 1.0], [1.0, 2.0])
    ts.append(2.0, 3.0)
    assert len(ts) == 3
    with pytest.raises(ValueError):
        ts.append(2.0, 1.0)
    with pytest.raises(ValueError):
        dg.TimeSeries([0.0, 0.0], [1.0, 1.0])
    assert len(ts.window(0.5, 2.0)) == 2


def test_decay_fit_examples():
    t = np.linspace(0, 1, 50)
    fit = dg.decay_fit(dg.TimeSeries(t, np.exp(-2 * t)))
    assert fit.rate == pytest.approx(2.0, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    const = dg.decay_fit(dg.TimeSeries(t, np.full(50, 3.0)))
    assert const.rate == 0.0 and const.r_squared == 0.0 and const.degenerate
    rng = np.random.default_rng(0)
    noisy = dg.decay_fit(dg.TimeSeries(t * 5, 3 * np.exp(-0.7 * t * 5) * (1 + 0.01 * rng.standard_normal(50))))
    assert noisy.rate == pytest.approx(0.7, abs=0.05)
    with pytest.raises(ValueError):
        dg.decay_fit(dg.TimeSeries(t, np.exp(-t) - 0.5))
    with pytest.raises(ValueError):
        dg.decay_fit(dg.TimeSeries(t[:9], np.exp(-t[:9])))
    windowed = dg.decay_fit(dg.TimeSeries(t, np.exp(-2 * t)), (0.5, 1.0))
    assert windowed.samples == 25
