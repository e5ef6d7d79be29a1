"""Solver library and experiment harness for a quasilinear problem with a
singular lower-order source, built around a truncation/shift approximation
scheme on 1-D and radially reduced ball domains."""

from .mesh import (
    GridFunction,
    Mesh,
    build_interval_mesh,
    build_radial_mesh,
    cell_gradient,
    integrate,
)
from .pde import Eigenpair, SolverOptions, energy, first_eigenpair, jacobian, residual, solve_frozen

__all__ = [
    "GridFunction",
    "Mesh",
    "build_interval_mesh",
    "build_radial_mesh",
    "cell_gradient",
    "integrate",
    "Eigenpair",
    "SolverOptions",
    "energy",
    "first_eigenpair",
    "jacobian",
    "residual",
    "solve_frozen",
]

__version__ = "0.1.0"
