"""Discrete operators on the staggered grid.

The scheme's energy law rests on a few exact discrete identities. This script
measures each of them on random fields.
"""
# %%
import numpy as np

from acns import Grid
from acns.initial import solenoidal

grid = Grid(64, 48, 1.0, 0.75)
rng = np.random.default_rng(0)


def random_scalar():
    return grid.apply_bc_neumann(rng.standard_normal(grid.scalar_shape))


def random_velocity():
    vel = grid.velocity()
    vel.u[...] = rng.standard_normal(grid.u_shape)
    vel.v[...] = rng.standard_normal(grid.v_shape)
    return grid.apply_bc_velocity(vel)


# %% gradient and divergence are negative adjoints for no-slip velocities
q, vel = random_scalar(), random_velocity()
a = grid.inner_velocity(grid.gradient(q), vel)
b = grid.inner_scalar(q, grid.divergence(vel))
print(f"<grad q, u> + <q, div u> = {a + b:.3e}   (|<grad q, u>| = {abs(a):.3e})")

# %% the Neumann Laplacian has zero mean and is negative semidefinite
lap = grid.laplacian_neumann(q)
print(f"mean of lap q = {grid.interior(lap).mean():.3e}")
print(f"<lap q, q> = {grid.inner_scalar(lap, q):.3e}  (must be <= 0)")

# %% advection by a solenoidal field conserves ||s||^2
sol = solenoidal(grid, rng.standard_normal((grid.nx - 1, grid.ny - 1)))
print(f"max |div u| of the stream-function field = {np.abs(grid.interior(grid.divergence(sol))).max():.3e}")
print(f"<u.grad s, s> = {grid.inner_scalar(grid.advect_scalar(sol, q), q):.3e}")

# %% the capillary force does exactly the work removed from the free energy by transport
lam = 0.01
work = grid.inner_velocity(grid.capillary_force(q, lam), sol)
transport = -lam * grid.inner_scalar(grid.laplacian_neumann(q), grid.advect_scalar(sol, q))
print(f"capillary work {work:.6e}  vs  transport term {transport:.6e}")
