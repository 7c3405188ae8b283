"""Reduce a fractional optimal control problem to finite-dimensional data.

The unknowns are the nodal values ``a`` of ``D^alpha x`` and ``u`` of the
control. The state and the lower-order derivatives are affine in ``a``::

    x   = P(alpha)^T a + D
    x_s = P(alpha - alpha_s)^T a + D_s

The cost becomes a Simpson sum over nodes, the dynamics a nodal residual,
and path constraints are enforced at the ``2n + 1`` interior points
``tau_i = (i + 1) t_f / (2 (n + 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_even_resolution, check_finite, check_vector
from .frac_operators import (
    OperationalMatrix,
    build_operational_matrix,
    fractional_term_vector,
    polynomial_term_vector,
)
from .hat_basis import HatBasis
from .problem import DerivativeFacility, FocpProblem, validate

__all__ = [
    "Discretization",
    "KktPoint",
    "discretize",
    "state_nodes",
    "lower_derivative_nodes",
    "objective",
    "dynamics_residual",
    "kkt_residual",
    "lagrangian",
    "collocation_points",
    "constraint_values",
]


@dataclass(frozen=True)
class KktPoint:
    """Nodal unknowns ``a`` (of ``D^alpha x``), ``u`` and multipliers ``lam``."""

    a: np.ndarray
    u: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        size = a.size
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "u", check_vector(self.u, size, "u"))
        object.__setattr__(self, "lam", check_vector(self.lam, size, "lam"))

    @classmethod
    def zeros(cls, size: int) -> "KktPoint":
        return cls(np.zeros(size), np.zeros(size), np.zeros(size))

    @classmethod
    def from_vector(cls, z) -> "KktPoint":
        z = np.asarray(z, dtype=float)
        size = z.size // 3
        return cls(z[:size], z[size : 2 * size], z[2 * size :])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.u, self.lam])


@dataclass(frozen=True)
class Discretization:
    """Everything that depends on the grid but not on the unknowns."""

    basis: HatBasis
    theta: np.ndarray
    weights: np.ndarray
    p_alpha: OperationalMatrix
    p_lower: tuple
    d_vec: np.ndarray
    d_lower: tuple
    tau: np.ndarray = field(repr=False)
    colloc_basis: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def size(self) -> int:
        return self.basis.n + 1

    @property
    def k(self) -> int:
        return len(self.p_lower)


def collocation_points(basis: HatBasis) -> np.ndarray:
    """The ``2n + 1`` Newton-Cotes collocation points inside ``(0, t_f)``."""
    i = np.arange(2 * basis.n + 1, dtype=float)
    return (i + 1.0) / (2.0 * (basis.n + 1)) * basis.t_f


def discretize(problem: FocpProblem, n: int) -> Discretization:
    """Assemble grid, weights, operational matrices and initial-value vectors."""
    errors = validate(problem)
    if errors:
        raise ValueError("invalid problem: " + "; ".join(errors))
    n = check_even_resolution(n)
    basis = HatBasis(n, problem.t_f)
    q = problem.initial_values
    p_lower = tuple(build_operational_matrix(basis, problem.alpha - a_s) for a_s in problem.lower_orders)
    d_lower = tuple(fractional_term_vector(basis, q, a_s, problem.m) for a_s in problem.lower_orders)
    tau = collocation_points(basis)
    return Discretization(
        basis=basis,
        theta=basis.nodes,
        weights=basis.quadrature_weights(),
        p_alpha=build_operational_matrix(basis, problem.alpha),
        p_lower=p_lower,
        d_vec=polynomial_term_vector(basis, q),
        d_lower=d_lower,
        tau=tau,
        colloc_basis=basis.eval_basis_vector(tau),
    )


def state_nodes(disc: Discretization, a) -> np.ndarray:
    """Nodal state values ``x_j = sum_i a_i p_ij + D_j``."""
    a = check_vector(a, disc.size, "a")
    return disc.p_alpha.entries.T @ a + disc.d_vec


def lower_derivative_nodes(disc: Discretization, a, s: int) -> np.ndarray:
    """Nodal values of ``D^alpha_s x`` for ``s`` in ``1..k``."""
    if not 1 <= s <= disc.k:
        raise IndexError(f"lower-order index {s} outside 1..{disc.k}")
    a = check_vector(a, disc.size, "a")
    return disc.p_lower[s - 1].entries.T @ a + disc.d_lower[s - 1]


def _lower_all(disc: Discretization, a: np.ndarray) -> list:
    return [p.entries.T @ a + d for p, d in zip(disc.p_lower, disc.d_lower)]


def objective(disc: Discretization, problem: FocpProblem, point: KktPoint) -> float:
    """Discrete cost ``sum_j w_j f(t_j, x_j, u_j)``."""
    x = state_nodes(disc, point.a)
    fv = check_finite(problem.call(problem.integrand, disc.theta, x, point.u), "integrand value (node index)")
    return float(disc.weights @ fv)


def dynamics_residual(disc: Discretization, problem: FocpProblem, point: KktPoint) -> np.ndarray:
    """``a_j - g(t_j, x_j, x_{1,j}, ..., x_{k,j}, u_j)`` for every node."""
    x = state_nodes(disc, point.a)
    gv = problem.call(problem.dynamics, disc.theta, x, *_lower_all(disc, point.a), point.u)
    return point.a - check_finite(gv, "dynamics value (node index)")


def lagrangian(disc: Discretization, problem: FocpProblem, point: KktPoint) -> float:
    """Scalar ``J* = J_n + (A - g)^T lambda``."""
    return objective(disc, problem, point) + float(dynamics_residual(disc, problem, point) @ point.lam)


@dataclass
class _NodalDerivatives:
    x: np.ndarray
    xs: list
    f_x: np.ndarray
    f_u: np.ndarray
    g: np.ndarray
    g_x: np.ndarray
    g_d: list
    g_u: np.ndarray


def _nodal_derivatives(disc, problem, facility, a, u) -> _NodalDerivatives:
    x = state_nodes(disc, a)
    xs = _lower_all(disc, a)
    t = disc.theta
    k = disc.k
    f_x, f_u = facility.partials(problem, "f", problem.integrand, (t, x, u), (1, 2))
    g_point = (t, x, *xs, u)
    g_parts = facility.partials(problem, "g", problem.dynamics, g_point, range(1, k + 3))
    g = check_finite(problem.call(problem.dynamics, *g_point), "dynamics value (node index)")
    return _NodalDerivatives(x, xs, f_x, f_u, g, g_parts[0], list(g_parts[1 : k + 1]), g_parts[k + 1])


def kkt_residual(
    disc: Discretization, problem: FocpProblem, facility: DerivativeFacility, point: KktPoint
) -> np.ndarray:
    """Stationarity of ``J*`` in ``(a, u, lambda)``, stacked in that order.

    ``dJ*/da_i = sum_j p_ij (w_j f_x - lam_j g_x)_j + lam_i
    - sum_s sum_j p^s_ij lam_j g_{d_s, j}``, ``dJ*/du_i = w_i f_u - lam_i g_u``
    and ``dJ*/dlam_i`` is the dynamics residual.
    """
    if problem.has_constraints:
        raise ValueError("kkt_residual applies to problems without inequality constraints")
    nd = _nodal_derivatives(disc, problem, facility, point.a, point.u)
    lam, w = point.lam, disc.weights
    r_a = disc.p_alpha.entries @ (w * nd.f_x - lam * nd.g_x) + lam
    for p_s, g_ds in zip(disc.p_lower, nd.g_d):
        r_a -= p_s.entries @ (lam * g_ds)
    r_u = w * nd.f_u - lam * nd.g_u
    r_l = point.a - nd.g
    return check_finite(np.concatenate([r_a, r_u, r_l]), "KKT residual entry")


def constraint_values(disc: Discretization, problem: FocpProblem, point: KktPoint) -> np.ndarray:
    """Constraint values at the collocation points, shape ``(#constraints, 2n + 1)``."""
    if not problem.has_constraints:
        raise ValueError("problem has no inequality constraints")
    args = _colloc_arguments(disc, point.a, point.u)
    rows = [problem.call(h, *args) for h in problem.constraints]
    return check_finite(np.vstack(rows), "constraint value")


def _colloc_arguments(disc: Discretization, a, u) -> tuple:
    a = check_vector(a, disc.size, "a")
    b = disc.colloc_basis
    x = state_nodes(disc, a)
    xs = _lower_all(disc, a)
    return (disc.tau, b @ x, *[b @ v for v in xs], b @ a, b @ check_vector(u, disc.size, "u"))
