"""A relaxing bubble: energy law, incompressibility and the phase bounds.

A disc of the light fluid sits in the heavy one. The interface relaxes, the
total energy falls, and the discrete energy balance closes at first order in dt.
"""
# %%
import time

import numpy as np

from acns import diagnostics as dg
from acns.config import RunConfig
from acns.initial import initial_condition
from acns.stepper import step

T = 0.05


def bubble_run(dt):
    cfg = RunConfig(dt=dt, t_end=T)
    params, scfg = cfg.params(), cfg.stepper()
    state = initial_condition(cfg)
    history = [state]
    for k in range(1, cfg.steps + 1):
        state, _ = step(state, scfg, params)
        state.time = k * dt
        history.append(state)
    return history, params


# %% three time steps; the worst balance residual should halve with dt
peaks = []
for dt in (5e-4, 2.5e-4, 1.25e-4):
    t0 = time.perf_counter()
    history, params = bubble_run(dt)
    audit = dg.energy_balance_audit(history, params)
    residual = np.abs(audit.values).max()
    peaks.append(residual)
    energy = [dg.total_energy(s, params) for s in history]
    div = max(dg.monitors(s)[0] for s in history)
    phi_max = max(np.abs(s.grid.interior(s.phase)).max() for s in history)
    print(f"dt={dt:.2e}: E {energy[0]:.6e} -> {energy[-1]:.6e}, max |audit| {residual:.3e}, "
          f"max div {div:.1e}, max |phi| {phi_max:.4f}, {time.perf_counter() - t0:.1f}s")

print("residual ratios:", [f"{b / a:.3f}" for a, b in zip(peaks, peaks[1:])])
