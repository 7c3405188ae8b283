"""Solvers for the discretized problem.

Unconstrained problems are solved by damped Newton on the ``3(n + 1)``
stationarity conditions of ``J*``. Problems with path constraints become a
nonlinear program in ``(a, u)``; it is handled by an augmented Lagrangian
(multipliers on the dynamics, squared-hinge terms on the inequalities) whose
inner minimizations use Newton with a finite-difference Hessian.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .discretizer import (
    Discretization,
    KktPoint,
    _colloc_arguments,
    _nodal_derivatives,
    constraint_values,
    dynamics_residual,
    kkt_residual,
    lower_derivative_nodes,
    objective,
    state_nodes,
)
from .problem import DerivativeFacility, FocpProblem

__all__ = [
    "SolverConfig",
    "Solution",
    "SolverError",
    "SingularJacobianError",
    "solve",
    "solve_unconstrained",
    "solve_constrained",
    "reconstruct",
    "fd_jacobian",
    "prolong",
]

logger = logging.getLogger(__name__)

_EPS_CBRT = float(np.finfo(float).eps ** (1.0 / 3.0))


class SolverError(RuntimeError):
    """Numerical failure inside a solve."""


class SingularJacobianError(SolverError):
    def __init__(self, iteration: int, condition: float):
        self.iteration = iteration
        self.condition = condition
        super().__init__(f"singular Jacobian at iteration {iteration} (condition estimate {condition:.3e})")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by both solve paths.

    ``initial_point`` is either ``None`` (all zeros) or a :class:`KktPoint`
    on the same grid.
    """

    max_iterations: int = 100
    residual_tol: float = 1e-10
    fd_jacobian_step: float = _EPS_CBRT
    line_search: str = "backtracking"
    initial_point: KktPoint | None = None
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    outer_iterations: int = 12

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.line_search not in ("none", "backtracking"):
            raise ValueError(f"unknown line_search {self.line_search!r}")
        if self.max_iterations < 1 or self.outer_iterations < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class Solution:
    point: KktPoint
    state: np.ndarray
    lower: tuple
    objective: float
    iterations: int
    final_residual: float
    converged: bool
    message: str = ""
    residual_history: list = field(default_factory=list)
    discretization: Discretization | None = field(default=None, repr=False)

    @property
    def control(self) -> np.ndarray:
        return self.point.u


def fd_jacobian(fun, z: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Jacobian of ``fun`` at ``z``, one column per variable."""
    z = np.asarray(z, dtype=float)
    cols = []
    for j in range(z.size):
        dz = step * max(1.0, abs(z[j]))
        zp = z.copy()
        zm = z.copy()
        zp[j] += dz
        zm[j] -= dz
        cols.append((fun(zp) - fun(zm)) / (zp[j] - zm[j]))
    return np.column_stack(cols)


def _lu_solve(jac: np.ndarray, rhs: np.ndarray, iteration: int) -> np.ndarray:
    with warnings.catch_warnings():
        # singularity is judged by the pivot test below
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(jac, check_finite=True)
    perm = np.arange(jac.shape[0])
    for i, p in enumerate(piv):
        perm[i], perm[p] = perm[p], perm[i]
    row_norms = np.linalg.norm(jac[perm], axis=1)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots < 1e-13 * row_norms) or np.any(row_norms == 0):
        raise SingularJacobianError(iteration, float(np.linalg.cond(jac)))
    return linalg.lu_solve((lu, piv), rhs)


def _package(disc, problem, point, iterations, residual, converged, message, history) -> Solution:
    lower = tuple(lower_derivative_nodes(disc, point.a, s) for s in range(1, disc.k + 1))
    return Solution(
        point=point,
        state=state_nodes(disc, point.a),
        lower=lower,
        objective=objective(disc, problem, point),
        iterations=iterations,
        final_residual=residual,
        converged=converged,
        message=message,
        residual_history=history,
        discretization=disc,
    )


def solve_unconstrained(
    disc: Discretization,
    problem: FocpProblem,
    facility: DerivativeFacility | None = None,
    config: SolverConfig | None = None,
) -> Solution:
    """Damped Newton on the KKT residual.

    Raises
    ------
    SingularJacobianError
        When LU meets a pivot below ``1e-13`` times its row norm.
    """
    if problem.has_constraints:
        raise ValueError("problem has inequality constraints; use solve_constrained")
    facility = facility or DerivativeFacility()
    config = config or SolverConfig()
    start = config.initial_point or KktPoint.zeros(disc.size)

    def residual(z):
        return kkt_residual(disc, problem, facility, KktPoint.from_vector(z))

    z = start.to_vector()
    r = residual(z)
    norm = float(np.max(np.abs(r)))
    history = [norm]
    message = "maximum iterations reached"
    converged = False
    it = 0
    while True:
        if norm <= config.residual_tol:
            converged, message = True, "converged"
            break
        if it >= config.max_iterations:
            break
        it += 1
        jac = fd_jacobian(residual, z, config.fd_jacobian_step)
        dz = _lu_solve(jac, -r, it)
        step = 1.0
        z_new = z + dz
        r_new = residual(z_new)
        if config.line_search == "backtracking":
            base = np.linalg.norm(r)
            halvings = 0
            while not np.linalg.norm(r_new) < base and halvings < 30:
                step *= 0.5
                halvings += 1
                z_new = z + step * dz
                r_new = residual(z_new)
            if not np.linalg.norm(r_new) < base:
                message = f"line search failed at iteration {it}"
                break
        z, r = z_new, r_new
        norm = float(np.max(np.abs(r)))
        history.append(norm)
        logger.debug("newton it=%d step=%.3g |r|=%.3e", it, step, norm)
    return _package(disc, problem, KktPoint.from_vector(z), it, norm, converged, message, history)


class _AugmentedLagrangian:
    """Value and gradient of the augmented Lagrangian in ``y = (a, u)``."""

    def __init__(self, disc, problem, facility):
        self.disc = disc
        self.problem = problem
        self.facility = facility
        self.size = disc.size

    def split(self, y):
        return y[: self.size], y[self.size :]

    def pieces(self, y, with_gradients=True):
        disc, problem, facility = self.disc, self.problem, self.facility
        a, u = self.split(y)
        point = KktPoint(a, u, np.zeros(self.size))
        J = objective(disc, problem, point)
        h = dynamics_residual(disc, problem, point)
        c = constraint_values(disc, problem, point).reshape(-1)
        if not with_gradients:
            return J, h, c, None, None, None
        nd = _nodal_derivatives(disc, problem, facility, a, u)
        w = disc.weights
        p = disc.p_alpha.entries
        grad_j = np.concatenate([p @ (w * nd.f_x), w * nd.f_u])
        jh_a = np.eye(self.size) - nd.g_x[:, None] * p.T
        for p_s, g_ds in zip(disc.p_lower, nd.g_d):
            jh_a -= g_ds[:, None] * p_s.entries.T
        jh = np.hstack([jh_a, np.diag(-nd.g_u)])
        jc = self._constraint_jacobian(a, u)
        return J, h, c, grad_j, jh, jc

    def _constraint_jacobian(self, a, u):
        disc, problem = self.disc, self.problem
        b = disc.colloc_basis
        args = _colloc_arguments(disc, a, u)
        k = disc.k
        bx = b @ disc.p_alpha.entries.T
        bxs = [b @ p_s.entries.T for p_s in disc.p_lower]
        blocks = []
        for ci, hfn in enumerate(problem.constraints):
            parts = self.facility.partials(problem, ("H", ci), hfn, args, range(1, k + 4))
            h_x, h_ds, h_a, h_u = parts[0], parts[1 : k + 1], parts[k + 1], parts[k + 2]
            da = h_x[:, None] * bx + h_a[:, None] * b
            for hd, m in zip(h_ds, bxs):
                da = da + hd[:, None] * m
            blocks.append(np.hstack([da, h_u[:, None] * b]))
        return np.vstack(blocks)

    def value(self, y, mu, nu, rho):
        J, h, c, *_ = self.pieces(y, with_gradients=False)
        shifted = np.maximum(0.0, nu + rho * c)
        return J + mu @ h + 0.5 * rho * h @ h + (shifted @ shifted - nu @ nu) / (2.0 * rho)

    def gradient(self, y, mu, nu, rho):
        J, h, c, grad_j, jh, jc = self.pieces(y)
        shifted = np.maximum(0.0, nu + rho * c)
        return grad_j + jh.T @ (mu + rho * h) + jc.T @ shifted


def _minimize_inner(al, y, mu, nu, rho, config, tol):
    """Newton with a finite-difference Hessian, Armijo steps and a
    Levenberg shift that grows whenever the line search fails."""
    grad = al.gradient(y, mu, nu, rho)
    gnorm = float(np.max(np.abs(grad)))
    val = al.value(y, mu, nu, rho)
    it = 0
    while gnorm > tol and it < config.max_iterations:
        it += 1
        hess = fd_jacobian(lambda v: al.gradient(v, mu, nu, rho), y, config.fd_jacobian_step)
        hess = 0.5 * (hess + hess.T)
        eye = np.eye(hess.shape[0])
        scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
        shift = 0.0
        accepted = False
        while shift <= 1e8 * scale:
            try:
                chol = linalg.cho_factor(hess + shift * eye)
            except linalg.LinAlgError:
                shift = max(1e-10 * scale, 10.0 * shift)
                continue
            dy = -linalg.cho_solve(chol, grad)
            slope = float(grad @ dy)
            step = 1.0
            if config.line_search == "none":
                y, val, accepted = y + dy, al.value(y + dy, mu, nu, rho), True
                break
            for _ in range(30):
                y_new = y + step * dy
                v_new = al.value(y_new, mu, nu, rho)
                if v_new <= val + 1e-4 * step * slope:
                    y, val, accepted = y_new, v_new, True
                    break
                step *= 0.5
            if accepted:
                break
            # Merit stuck at round-off: take the full step if it shrinks the gradient.
            g_full = al.gradient(y + dy, mu, nu, rho)
            if np.max(np.abs(g_full)) < gnorm and abs(slope) < 1e-12 * max(1.0, abs(val)):
                y, val, accepted = y + dy, al.value(y + dy, mu, nu, rho), True
                break
            shift = max(1e-6 * scale, 100.0 * shift)
        if not accepted:
            break
        grad = al.gradient(y, mu, nu, rho)
        gnorm = float(np.max(np.abs(grad)))
    return y, gnorm, it


def solve_constrained(
    disc: Discretization,
    problem: FocpProblem,
    facility: DerivativeFacility | None = None,
    config: SolverConfig | None = None,
) -> Solution:
    """Augmented-Lagrangian solve of the collocated nonlinear program."""
    if not problem.has_constraints:
        raise ValueError("problem has no inequality constraints; use solve_unconstrained")
    facility = facility or DerivativeFacility()
    config = config or SolverConfig()
    start = config.initial_point or KktPoint.zeros(disc.size)
    al = _AugmentedLagrangian(disc, problem, facility)
    y = np.concatenate([start.a, start.u])
    mu = start.lam.copy()
    n_ineq = len(problem.constraints) * disc.tau.size
    nu = np.zeros(n_ineq)
    rho = float(config.penalty_init)
    tol = config.residual_tol
    total_iters = 0
    history = []
    prev_violation = np.inf
    stalls = 0
    converged = False
    message = "outer iteration limit reached"
    stationarity = np.inf
    for outer in range(1, config.outer_iterations + 1):
        y, stationarity, inner_its = _minimize_inner(al, y, mu, nu, rho, config, tol)
        total_iters += inner_its
        _, h, c, *_ = al.pieces(y, with_gradients=False)
        violation = max(float(np.max(np.abs(h))), float(np.max(c, initial=0.0)))
        history.append(max(violation, stationarity))
        logger.debug("auglag outer=%d rho=%.1e viol=%.3e stat=%.3e", outer, rho, violation, stationarity)
        mu = mu + rho * h
        nu = np.maximum(0.0, nu + rho * c)
        if violation <= tol and stationarity <= tol:
            converged, message = True, "converged"
            break
        if violation >= prev_violation:
            stalls += 1
            if stalls >= 3:
                message = f"stalled: violation not decreasing after outer iteration {outer}"
                break
        else:
            stalls = 0
        if violation > 0.25 * prev_violation:
            rho *= config.penalty_growth
        prev_violation = min(prev_violation, violation)
    a, u = al.split(y)
    residual = max(history[-1] if history else np.inf, 0.0)
    point = KktPoint(a, u, mu)
    return _package(disc, problem, point, total_iters, residual, converged, message, history)


def solve(
    disc: Discretization,
    problem: FocpProblem,
    facility: DerivativeFacility | None = None,
    config: SolverConfig | None = None,
) -> Solution:
    """Dispatch on whether the problem carries path constraints."""
    if problem.has_constraints:
        return solve_constrained(disc, problem, facility, config)
    return solve_unconstrained(disc, problem, facility, config)


def reconstruct(disc: Discretization, solution: Solution, t):
    """State and control of the hat expansion at ``t`` (scalar or array)."""
    x = disc.basis.evaluate(solution.state, t)
    u = disc.basis.evaluate(solution.point.u, t)
    if np.ndim(t) == 0:
        return float(x), float(u)
    return x, u


def prolong(solution: Solution, fine: Discretization) -> KktPoint:
    """Carry a converged coarse solution onto a finer grid as a starting point.

    ``a`` and ``u`` are nodal function values and are re-sampled through the
    coarse hat expansion. Multipliers scale with the quadrature weights, so
    ``lam / w`` is re-sampled instead.
    """
    coarse = solution.discretization
    if coarse is None:
        raise ValueError("solution carries no discretization to prolong from")
    if coarse.basis.t_f != fine.basis.t_f:
        raise ValueError("grids must share the horizon")
    basis = coarse.basis
    a = basis.evaluate(solution.point.a, fine.theta)
    u = basis.evaluate(solution.point.u, fine.theta)
    lam = basis.evaluate(solution.point.lam / coarse.weights, fine.theta) * fine.weights
    return KktPoint(a, u, lam)
