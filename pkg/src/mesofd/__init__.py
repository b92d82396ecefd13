"""EDF-based multi-level finite-difference schemes.

Modules: ``lattice`` (velocity sets and weights), ``edf`` (quadratic
equilibria), ``scheme`` (stencil coefficients and Taylor constants),
``stability`` (von Neumann analysis), ``stepper`` (explicit time stepping)
and ``harness`` (example problems and convergence tables).
"""

from .errors import MesoFDError
from .lattice import LatticeModel, build_lattice, standard_lattice, validate_lattice
from .scheme import SchemeCoefficients, StencilTargets, preset, solve_three_level
from .stepper import ProblemSpec, make_grid, run
from .harness import convergence_study, example_problem, gre

__version__ = "0.1.0"

__all__ = [
    "MesoFDError",
    "LatticeModel",
    "build_lattice",
    "standard_lattice",
    "validate_lattice",
    "SchemeCoefficients",
    "StencilTargets",
    "preset",
    "solve_three_level",
    "ProblemSpec",
    "make_grid",
    "run",
    "convergence_study",
    "example_problem",
    "gre",
]
