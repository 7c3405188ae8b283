"""Fractional optimal control problems solved in a modified hat-function basis."""

from .bench import ErrorReport, ExampleCase, convergence_order, error_l2, get_example, run_table
from .discretizer import KktPoint, discretize
from .estimator import HatFunctionSolver
from .frac_operators import build_operational_matrix
from .hat_basis import HatBasis
from .problem import DerivativeFacility, FocpProblem, validate
from .solver import Solution, SolverConfig, reconstruct, solve, solve_constrained, solve_unconstrained

__all__ = [
    "DerivativeFacility",
    "ErrorReport",
    "ExampleCase",
    "FocpProblem",
    "HatBasis",
    "HatFunctionSolver",
    "KktPoint",
    "Solution",
    "SolverConfig",
    "build_operational_matrix",
    "convergence_order",
    "discretize",
    "error_l2",
    "get_example",
    "reconstruct",
    "run_table",
    "solve",
    "solve_constrained",
    "solve_unconstrained",
    "validate",
]

__version__ = "0.1.0"
