"""Fractional integration in the hat basis.

``build_operational_matrix`` gives the matrix ``P`` with
``I^alpha psi_i(t) ~= sum_j P[i, j] psi_j(t)``; row ``i`` holds the values of
the Riemann-Liouville integral of ``psi_i`` at the grid nodes. The two term
vectors sample the polynomial parts that appear when a Caputo derivative is
integrated back (initial-value polynomial and its fractional derivatives).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._validation import check_positive
from .hat_basis import HatBasis
from .special import gamma

__all__ = [
    "OperationalMatrix",
    "build_operational_matrix",
    "rl_integral_oracle",
    "polynomial_term_vector",
    "fractional_term_vector",
]


@dataclass(frozen=True)
class OperationalMatrix:
    """Dense ``(n + 1) x (n + 1)`` fractional-integration matrix of one order."""

    order: float
    entries: np.ndarray
    basis: HatBasis

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def shape(self):
        return self.entries.shape


def _band_coefficients(alpha: float, n: int):
    a = alpha
    beta = np.zeros(n + 1)
    beta[1] = a * (3 + 2 * a)
    for i in range(2, n + 1):
        beta[i] = (
            i ** (a + 1) * (2 * i - 6 - 3 * a)
            + 2 * i**a * (1 + a) * (2 + a)
            - (i - 2) ** (a + 1) * (2 * i - 2 + a)
        )
    eta = np.zeros(n)
    eta[0] = 4 * (1 + a)
    for i in range(1, n):
        eta[i] = 4 * ((i - 1) ** (a + 1) * (i + 1 + a) - (i + 1) ** (a + 1) * (i - 1 - a))
    # xi[k + 1] stores xi_k for k = -1 .. n - 2
    xi = np.zeros(n)
    xi[0] = -a
    xi[1] = 2 ** (a + 1) * (2 - a)
    if n >= 3:
        xi[2] = 3 ** (a + 1) * (4 - a) - 6 * (2 + a)
    for k in range(2, n - 1):
        xi[k + 1] = (
            (k + 2) ** (a + 1) * (2 * k + 2 - a)
            - 6 * k ** (a + 1) * (2 + a)
            - (k - 2) ** (a + 1) * (2 * k - 2 + a)
        )
    return beta, eta, xi


def build_operational_matrix(basis: HatBasis, alpha: float) -> OperationalMatrix:
    """Operational matrix of fractional integration of order ``alpha > 0``."""
    alpha = check_positive(alpha, "alpha")
    n = basis.n
    beta, eta, xi = _band_coefficients(alpha, n)
    p = np.zeros((n + 1, n + 1))
    p[0, :] = beta
    for i in range(1, n + 1):
        if i % 2:
            p[i, i:] = eta[: n + 1 - i]
        else:
            p[i, i - 1 :] = xi[: n + 2 - i]
    p *= basis.h**alpha / (2.0 * gamma(alpha + 3.0))
    p.setflags(write=False)
    return OperationalMatrix(order=alpha, entries=p, basis=basis)


def rl_integral_oracle(f, alpha: float, t: float, tol: float = 1e-10, breakpoints=()) -> float:
    """Riemann-Liouville integral ``(I^alpha f)(t)`` by adaptive quadrature.

    For ``alpha < 1`` the weak endpoint singularity is removed with the
    substitution ``s = t - v**(1/alpha)``. ``breakpoints`` (values of ``s``
    where ``f`` has kinks) are forwarded to the quadrature.

    Raises
    ------
    ArithmeticError
        If the quadrature reports that it did not reach ``tol``.
    """
    alpha = check_positive(alpha, "alpha")
    t = float(t)
    if t <= 0.0:
        return 0.0
    kinks = sorted(s for s in breakpoints if 0.0 < s < t)
    if alpha < 1.0:
        upper = t**alpha
        points = [(t - s) ** alpha for s in kinks]

        def integrand(v):
            return f(t - v ** (1.0 / alpha))

        scale = 1.0 / gamma(alpha + 1.0)
    else:
        upper = t
        points = kinks

        def integrand(s):
            return (t - s) ** (alpha - 1.0) * f(s)

        scale = 1.0 / gamma(alpha)
    value, err, info = integrate.quad(
        integrand,
        0.0,
        upper,
        points=points or None,
        epsabs=tol * 0.1 / scale if scale else tol,
        epsrel=0.0,
        limit=500,
        full_output=1,
    )[:3]
    if err * scale > tol:
        raise ArithmeticError(f"RL quadrature did not converge (estimate {err * scale:.2e} > {tol:.2e})")
    return scale * value


def polynomial_term_vector(basis: HatBasis, q) -> np.ndarray:
    """Nodal samples of ``sum_i q_i t**i / i!``."""
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size == 0:
        raise ValueError("q must contain at least one initial value")
    t = basis.nodes
    out = np.zeros_like(t)
    for i, qi in enumerate(q):
        out += qi * t**i / math.factorial(i)
    return out


def fractional_term_vector(basis: HatBasis, q, alpha_s: float, m: int | None = None) -> np.ndarray:
    """Nodal samples of ``sum_{i=ceil(alpha_s)}^{m-1} q_i t**(i-alpha_s) / Gamma(i-alpha_s+1)``.

    ``0**0`` is taken as 1 (integer ``alpha_s`` with ``i == alpha_s``).
    """
    alpha_s = check_positive(alpha_s, "alpha_s")
    q = np.asarray(q, dtype=float).reshape(-1)
    m = q.size if m is None else int(m)
    t = basis.nodes
    out = np.zeros_like(t)
    for i in range(math.ceil(alpha_s), m):
        p = i - alpha_s
        powers = np.ones_like(t) if p == 0 else t**p
        out += q[i] * powers / gamma(p + 1.0)
    return out
