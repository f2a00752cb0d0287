"""Exponential return to the phi = +1 equilibrium.

A small bump in the phase field is released from rest. The energy of the
perturbation about the equilibrium, global_e0, decays like exp(-c t). The
velocity stays below the Poincare bound of the box.
"""
# %%
import os
import tempfile

from acns import diagnostics as dg
from acns.config import load_config
from acns.runner import decay

here = os.path.dirname(os.path.abspath(__file__))
cfg = load_config(os.path.join(here, "configs", "decay.conf"))
out = tempfile.mkdtemp(prefix="acns_decay_")
print(f"{cfg.steps} steps on {cfg.nx}x{cfg.ny}, output in {out}")

# %%
result, fit = decay(cfg, out)
e0 = result.column("global_e0")
print(f"c = {fit.rate:.4f}, r^2 = {fit.r_squared:.6f}, global_e0(T)/global_e0(0) = {e0[-1] / e0[0]:.4f}")

# %% velocity against the Poincare constant of the lowest Dirichlet mode
ref = dg.poincare_reference(cfg.grid())
peak = max(r for r in result.column("poincare_ratio") if r == r)
print(f"max ||u||/||grad u|| = {peak:.4f}, reference {ref:.4f}")

# %% a few rows of the series
for row in result.rows[::8]:
    print(f"t={row['t']:.3f}  global_e0={row['global_e0']:.4e}  e_total={row['e_total']:.4e}  "
          f"div={row['div_max']:.1e}")
