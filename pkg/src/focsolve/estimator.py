"""Estimator-style front end: configure, ``fit`` a problem, ``predict`` on times."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_even_resolution
from .discretizer import discretize
from .problem import DerivativeFacility, FocpProblem, validate
from .solver import SolverConfig, prolong, reconstruct, solve

__all__ = ["HatFunctionSolver"]


class HatFunctionSolver(BaseEstimator):
    """Solve a fractional optimal control problem on a hat-function grid.

    Parameters
    ----------
    n : int
        Number of subintervals (even).
    residual_tol : float
        Convergence tolerance on the residual infinity norm.
    max_iterations : int
        Newton iteration cap (per inner solve for constrained problems).
    derivative_mode : {"user-supplied", "finite-difference"}
        Whether analytic partials registered on the problem are used.
    fd_step : float, optional
        Relative central-difference step for partial derivatives.
    penalty_init, penalty_growth, outer_iterations
        Augmented-Lagrangian settings for constrained problems.
    warm_start : bool
        When refitting, start from the previous solution prolonged to the
        new grid (the horizon must match).

    Attributes
    ----------
    discretization_ : Discretization
    solution_ : Solution
    objective_ : float
    state_nodes_, control_nodes_ : ndarray
    n_iter_ : int
    converged_ : bool
    """

    def __init__(
        self,
        n=16,
        residual_tol=1e-10,
        max_iterations=100,
        derivative_mode="user-supplied",
        fd_step=None,
        penalty_init=10.0,
        penalty_growth=10.0,
        outer_iterations=12,
        warm_start=False,
    ):
        self.n = n
        self.residual_tol = residual_tol
        self.max_iterations = max_iterations
        self.derivative_mode = derivative_mode
        self.fd_step = fd_step
        self.penalty_init = penalty_init
        self.penalty_growth = penalty_growth
        self.outer_iterations = outer_iterations
        self.warm_start = warm_start

    def _facility(self) -> DerivativeFacility:
        if self.fd_step is None:
            return DerivativeFacility(mode=self.derivative_mode)
        return DerivativeFacility(mode=self.derivative_mode, fd_step=self.fd_step)

    def fit(self, problem: FocpProblem, y=None):
        """Discretize and solve ``problem``. ``y`` is ignored."""
        if not isinstance(problem, FocpProblem):
            raise TypeError(f"expected a FocpProblem, got {type(problem).__name__}")
        errors = validate(problem)
        if errors:
            raise ValueError("invalid problem: " + "; ".join(errors))
        n = check_even_resolution(self.n)
        disc = discretize(problem, n)
        start = None
        previous = getattr(self, "solution_", None)
        if self.warm_start and previous is not None and previous.discretization.basis.t_f == problem.t_f:
            start = prolong(previous, disc)
        config = SolverConfig(
            max_iterations=self.max_iterations,
            residual_tol=self.residual_tol,
            initial_point=start,
            penalty_init=self.penalty_init,
            penalty_growth=self.penalty_growth,
            outer_iterations=self.outer_iterations,
        )
        solution = solve(disc, problem, self._facility(), config)
        self.discretization_ = disc
        self.solution_ = solution
        self.objective_ = solution.objective
        self.state_nodes_ = solution.state
        self.control_nodes_ = solution.point.u
        self.n_iter_ = solution.iterations
        self.converged_ = solution.converged
        return self

    def predict(self, t):
        """Reconstructed state ``x_n(t)``."""
        check_is_fitted(self, "solution_")
        return reconstruct(self.discretization_, self.solution_, t)[0]

    def predict_control(self, t):
        """Reconstructed control ``u_n(t)``."""
        check_is_fitted(self, "solution_")
        return reconstruct(self.discretization_, self.solution_, t)[1]

    def transform(self, t):
        """Stack state and control at ``t`` into shape ``(len(t), 2)``."""
        check_is_fitted(self, "solution_")
        x, u = reconstruct(self.discretization_, self.solution_, np.atleast_1d(np.asarray(t, dtype=float)))
        return np.column_stack([x, u])
