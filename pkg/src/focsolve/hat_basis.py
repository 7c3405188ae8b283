"""Modified hat functions on a uniform grid.

The basis consists of ``n + 1`` piecewise quadratics on ``[0, t_f]`` with
``n`` even. Every function equals one at its own node and zero at the other
nodes, so an expansion's coefficients are just nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_even_resolution, check_positive, check_times, check_vector

__all__ = ["HatBasis"]


@dataclass(frozen=True)
class HatBasis:
    """Uniform grid of ``n`` subintervals on ``[0, t_f]``.

    Parameters
    ----------
    n : int
        Number of subintervals. Must be even and at least 2.
    t_f : float
        Right end of the horizon.
    """

    n: int
    t_f: float
    h: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", check_even_resolution(self.n))
        object.__setattr__(self, "t_f", check_positive(self.t_f, "t_f"))
        object.__setattr__(self, "h", self.t_f / self.n)

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def nodes(self) -> np.ndarray:
        """Node abscissae ``[0, h, 2h, ..., t_f]``."""
        nodes = self.h * np.arange(self.n + 1, dtype=float)
        nodes[-1] = self.t_f
        return nodes

    def eval_psi(self, i: int, t):
        """Evaluate the ``i``-th basis function at ``t`` (scalar or array)."""
        if not 0 <= i <= self.n:
            raise IndexError(f"basis index {i} outside 0..{self.n}")
        t_arr = check_times(t, self.t_f)
        out = self._psi(i, t_arr)
        return float(out) if np.ndim(t) == 0 else out

    def _psi(self, i: int, t: np.ndarray) -> np.ndarray:
        h, n = self.h, self.n
        c = 1.0 / (2.0 * h * h)
        out = np.zeros_like(t, dtype=float)
        if i == 0:
            m = t <= 2 * h
            out[m] = c * (t[m] - h) * (t[m] - 2 * h)
        elif i == n:
            m = t >= (n - 2) * h
            out[m] = c * (t[m] - (n - 1) * h) * (t[m] - (n - 2) * h)
        elif i % 2:
            m = (t >= (i - 1) * h) & (t <= (i + 1) * h)
            out[m] = -(t[m] - (i - 1) * h) * (t[m] - (i + 1) * h) / (h * h)
        else:
            # Left piece wins at t == i*h; both pieces give 1 there.
            left = (t >= (i - 2) * h) & (t <= i * h)
            right = (t > i * h) & (t <= (i + 2) * h)
            out[left] = c * (t[left] - (i - 1) * h) * (t[left] - (i - 2) * h)
            out[right] = c * (t[right] - (i + 1) * h) * (t[right] - (i + 2) * h)
        return out

    def eval_basis_vector(self, t) -> np.ndarray:
        """Basis vector ``Psi(t)``.

        For scalar ``t`` the result has shape ``(n + 1,)``; for an array of
        ``m`` points it has shape ``(m, n + 1)`` (one row per point).
        """
        t_arr = np.atleast_1d(check_times(t, self.t_f))
        # Only the three functions of the covering pair of subintervals are
        # nonzero, so assemble them directly instead of looping over all i.
        h = self.h
        rows = np.zeros((t_arr.size, self.n + 1))
        pair = np.minimum((t_arr / h) // 2, self.n // 2 - 1).astype(int)
        # Points sitting exactly on an even interior node belong to the left pair.
        on_node = np.isclose(t_arr, 2 * pair * h, rtol=0.0, atol=1e-15 * self.t_f) & (pair > 0)
        pair = np.where(on_node, pair - 1, pair)
        left = 2 * pair
        s = (t_arr - left * h) / h
        idx = np.arange(t_arr.size)
        rows[idx, left] = 0.5 * (s - 1.0) * (s - 2.0)
        rows[idx, left + 1] = -s * (s - 2.0)
        rows[idx, left + 2] = 0.5 * s * (s - 1.0)
        return rows[0] if np.ndim(t) == 0 else rows

    def interpolate(self, samples) -> np.ndarray:
        """Coefficient vector of the interpolant through nodal ``samples``."""
        return check_vector(samples, self.n + 1, "samples").copy()

    def interpolate_function(self, fn) -> np.ndarray:
        """Sample ``fn`` at the nodes; ``fn`` must accept a float array."""
        return self.interpolate(np.asarray(fn(self.nodes), dtype=float) * np.ones(self.n + 1))

    def evaluate(self, coefficients, t):
        """Evaluate the expansion ``coefficients^T Psi(t)``."""
        coef = check_vector(coefficients, self.n + 1, "coefficients")
        return self.eval_basis_vector(t) @ coef

    def quadrature_weights(self) -> np.ndarray:
        """Integrals of the basis functions (composite Simpson weights)."""
        w = np.full(self.n + 1, 2.0 * self.h / 3.0)
        w[1::2] = 4.0 * self.h / 3.0
        w[0] = w[-1] = self.h / 3.0
        return w
