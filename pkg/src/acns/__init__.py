"""Finite-difference Allen-Cahn-Navier-Stokes solver with energy and decay diagnostics."""
from .constitutive import Params
from .grid import Grid, SimState, StaggeredVelocity
from .stepper import StepperConfig, step

__all__ = ["Params", "Grid", "SimState", "StaggeredVelocity", "StepperConfig", "step"]
__version__ = "0.1.0"
