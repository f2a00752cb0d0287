import numpy as np
import pytest

from acns import Grid, Params, SimState
from acns.initial import solenoidal

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def params():
    return Params()


def random_scalar(grid: Grid, rng) -> np.ndarray:
    return grid.apply_bc_neumann(rng.standard_normal(grid.scalar_shape))


def random_velocity(grid: Grid, rng):
    vel = grid.velocity()
    vel.u[...] = rng.standard_normal(grid.u_shape)
    vel.v[...] = rng.standard_normal(grid.v_shape)
    return grid.apply_bc_velocity(vel)


def random_solenoidal(grid: Grid, rng, amplitude=1.0):
    vel = solenoidal(grid, rng.standard_normal((grid.nx - 1, grid.ny - 1)))
    return vel * (amplitude / vel.max_abs())


def rest_state(grid: Grid, phase) -> SimState:
    return SimState(grid, grid.velocity(), grid.scalar(), grid.apply_bc_neumann(phase))
