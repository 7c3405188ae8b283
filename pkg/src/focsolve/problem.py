"""Continuous fractional optimal control problems and derivative evaluation.

A problem minimizes ``int_0^t_f f(t, x, u) dt`` subject to the Caputo
dynamics ``D^alpha x = g(t, x, d_1, ..., d_k, u)`` where ``d_s = D^alpha_s x``,
the initial values ``x^(i)(0) = q_i``, and optional path constraints
``H(t, x, d_1, ..., d_k, a, u) <= 0`` with ``a = D^alpha x``.

User functions are called with numpy arrays (one entry per node) unless the
problem is built with ``vectorized=False``, in which case they are called
point by point. They must be pure.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

__all__ = ["FocpProblem", "DerivativeFacility", "validate", "partials"]

_EPS_CBRT = float(np.finfo(float).eps ** (1.0 / 3.0))


@dataclass(frozen=True)
class FocpProblem:
    """A scalar fractional optimal control problem.

    Parameters
    ----------
    t_f : float
        Horizon.
    alpha : float
        Caputo order of the dynamics, ``m - 1 < alpha <= m``.
    initial_values : sequence of float
        ``q_0 .. q_{m-1}``.
    integrand : callable
        ``f(t, x, u)``.
    dynamics : callable
        ``g(t, x, d_1, ..., d_k, u)``.
    lower_orders : sequence of float
        Increasing orders ``alpha_1 < ... < alpha_k < alpha`` appearing in ``g``.
    constraints : sequence of callable
        Each ``H(t, x, d_1, ..., d_k, a, u)``, required to be ``<= 0``.
    partials : dict, optional
        Analytic partial derivatives keyed by ``(name, argument_index)`` with
        ``name`` in ``{"f", "g"}`` or ``("H", c)`` for constraint ``c``. Missing
        entries fall back to finite differences.
    """

    t_f: float
    alpha: float
    initial_values: Sequence[float]
    integrand: Callable
    dynamics: Callable
    lower_orders: Sequence[float] = ()
    constraints: Sequence[Callable] = ()
    partials: dict = field(default_factory=dict)
    vectorized: bool = True
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "initial_values", tuple(float(q) for q in self.initial_values))
        object.__setattr__(self, "lower_orders", tuple(float(a) for a in self.lower_orders))
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def m(self) -> int:
        return max(1, math.ceil(self.alpha))

    @property
    def k(self) -> int:
        return len(self.lower_orders)

    @property
    def has_constraints(self) -> bool:
        return bool(self.constraints)

    def call(self, fn, *args):
        """Evaluate a user function over node arrays, honoring ``vectorized``."""
        if self.vectorized:
            shape = np.broadcast(*args).shape
            return np.broadcast_to(np.asarray(fn(*args), dtype=float), shape).astype(float)
        arrays = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
        out = np.empty(arrays[0].shape)
        flat = out.reshape(-1)
        for idx, vals in enumerate(zip(*[a.reshape(-1) for a in arrays])):
            flat[idx] = fn(*vals)
        return out


def validate(problem: FocpProblem) -> list[str]:
    """Return every invariant violation of ``problem``; empty means valid.

    Never raises.
    """
    errors: list[str] = []
    try:
        t_f = float(problem.t_f)
        if not (math.isfinite(t_f) and t_f > 0):
            errors.append(f"horizon t_f must be positive, got {problem.t_f!r}")
    except (TypeError, ValueError):
        errors.append(f"horizon t_f is not a number: {problem.t_f!r}")
    alpha_ok = False
    try:
        alpha = float(problem.alpha)
        alpha_ok = math.isfinite(alpha) and alpha > 0
        if not alpha_ok:
            errors.append(f"order alpha must be positive, got {problem.alpha!r}")
    except (TypeError, ValueError):
        errors.append(f"order alpha is not a number: {problem.alpha!r}")
    try:
        q = list(problem.initial_values)
        if alpha_ok and len(q) != math.ceil(alpha):
            errors.append(f"length(q) != ceil(alpha): got {len(q)} initial values, need {math.ceil(alpha)}")
    except TypeError:
        errors.append("initial_values is not a sequence")
    try:
        orders = [float(a) for a in problem.lower_orders]
        if any(b <= a for a, b in zip(orders, orders[1:])):
            errors.append("orders not increasing: lower_orders must be strictly increasing")
        if any(a <= 0 for a in orders):
            errors.append("lower orders must be positive")
        if alpha_ok and any(a >= alpha for a in orders):
            errors.append("lower orders must be below alpha")
        if len(orders) > 9:
            errors.append("at most 9 lower-order derivatives are supported")
    except (TypeError, ValueError):
        errors.append("lower_orders is not a sequence of numbers")
    for label, fn in (("integrand", problem.integrand), ("dynamics", problem.dynamics)):
        if not callable(fn):
            errors.append(f"{label} is not callable")
    try:
        for c, fn in enumerate(problem.constraints):
            if not callable(fn):
                errors.append(f"constraint {c} is not callable")
    except TypeError:
        errors.append("constraints is not a sequence")
    return errors


@dataclass(frozen=True)
class DerivativeFacility:
    """Partial derivatives of user functions.

    ``mode="finite-difference"`` uses central differences with step
    ``fd_step * max(1, |arg|)``. ``mode="user-supplied"`` prefers analytic
    partials registered on the problem and falls back to differences.
    """

    mode: str = "user-supplied"
    fd_step: float = _EPS_CBRT

    def __post_init__(self):
        if self.mode not in ("finite-difference", "user-supplied"):
            raise ValueError(f"unknown derivative mode {self.mode!r}")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    def partial(self, fn, point: Sequence, index: int, call=None):
        """``d fn / d point[index]`` at ``point`` (scalars or node arrays)."""
        call = call or (lambda g, *a: np.asarray(g(*a), dtype=float))
        args = [np.asarray(p, dtype=float) for p in point]
        base = args[index]
        step = self.fd_step * np.maximum(1.0, np.abs(base))
        # Make the step exactly representable relative to the base point.
        hi = base + step
        lo = base - step
        args[index] = hi
        f_hi = call(fn, *args)
        args[index] = lo
        f_lo = call(fn, *args)
        d = (f_hi - f_lo) / (hi - lo)
        if not np.all(np.isfinite(d)):
            raise FloatingPointError("non-finite function value while differencing")
        return float(d) if np.ndim(d) == 0 else d

    def partials(self, problem: FocpProblem, key, fn, point: Sequence, indices: Sequence[int]) -> list:
        """Partials of ``fn`` for several argument indices, analytic where available."""
        out = []
        for idx in indices:
            exact = problem.partials.get((key, idx)) if self.mode == "user-supplied" else None
            if exact is not None:
                val = problem.call(exact, *point)
                if not np.all(np.isfinite(val)):
                    raise FloatingPointError(f"non-finite analytic partial {key}/{idx}")
                out.append(val)
            else:
                out.append(self.partial(fn, point, idx, call=problem.call))
        return out


def partials(facility: DerivativeFacility, fn, point: Sequence, index: int):
    """Partial derivative of ``fn`` with respect to ``point[index]``."""
    return facility.partial(fn, point, index)
