"""Built-in benchmark problems, error metrics and convergence tables.

Three problems are registered:

``ex1``
    Nonlinear, ``alpha = 0.5`` on ``[0, 20]`` with a Bessel-type exact
    solution and optimal cost 0.
``ex2``
    Linear cost and dynamics with ``|u| <= 1`` and ``x + u <= 2``; for
    ``alpha = 1`` the solution is ``x = 2**t - 1``, ``u = 1``.
``ex3``
    Quadratic cost, ``alpha = 1.9`` with two initial values; exact
    ``x = 1 - t + t**4`` and optimal cost 0.
"""

from __future__ import annotations

import csv
import io
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .discretizer import discretize
from .problem import DerivativeFacility, FocpProblem
from .solver import Solution, SolverConfig, SolverError, prolong, solve
from .special import bessel_j0_array, gamma

__all__ = [
    "ExampleCase",
    "ErrorReport",
    "get_example",
    "EXAMPLE_IDS",
    "error_l2",
    "convergence_order",
    "run_table",
    "write_csv",
    "format_table",
    "CSV_COLUMNS",
]

EXAMPLE_IDS = ("ex1", "ex2", "ex3")
CSV_COLUMNS = ("n", "E_x", "order_x", "E_u", "order_u", "J_n", "cpu_seconds")


@dataclass(frozen=True)
class ExampleCase:
    id: str
    problem: FocpProblem
    exact_state: Callable | None = None
    exact_control: Callable | None = None
    exact_objective: float | None = None
    warm_start: bool = False


@dataclass
class ErrorReport:
    n: int
    e_x: float | None
    e_u: float | None
    order_x: float | None
    order_u: float | None
    j_n: float | None
    cpu_seconds: float
    converged: bool = True
    iterations: int = 0
    message: str = ""


def _example1() -> ExampleCase:
    sqrt_pi = math.sqrt(math.pi)
    src = 2.0 / (75.0 * sqrt_pi)

    def misfit(t, x, u):
        return 1.0 - (x - 0.01 * t**2 - 1.0) ** 2 + u - 2.0 * sqrt_pi * bessel_j0_array(4.0 * np.sqrt(t))

    def f(t, x, u):
        return misfit(t, x, u) ** 2

    def f_x(t, x, u):
        return -4.0 * misfit(t, x, u) * (x - 0.01 * t**2 - 1.0)

    def f_u(t, x, u):
        return 2.0 * misfit(t, x, u)

    def g(t, x, u):
        return -((x - 0.01 * t**2 - 1.0) ** 2) + u + 1.0 + src * t**1.5

    problem = FocpProblem(
        t_f=20.0,
        alpha=0.5,
        initial_values=[1.0],
        integrand=f,
        dynamics=g,
        partials={
            ("f", 1): f_x,
            ("f", 2): f_u,
            ("g", 1): lambda t, x, u: -2.0 * (x - 0.01 * t**2 - 1.0),
            ("g", 2): lambda t, x, u: np.ones_like(np.asarray(x, dtype=float)),
        },
        name="ex1",
    )
    return ExampleCase(
        id="ex1",
        problem=problem,
        exact_state=lambda t: np.sin(4.0 * np.sqrt(t)) + 0.01 * np.asarray(t) ** 2 + 1.0,
        exact_control=lambda t: -np.cos(4.0 * np.sqrt(t)) ** 2 + 2.0 * sqrt_pi * bessel_j0_array(4.0 * np.sqrt(t)),
        exact_objective=0.0,
        warm_start=True,
    )


def _example2(alpha: float = 1.0) -> ExampleCase:
    ln2 = math.log(2.0)
    m = max(1, math.ceil(alpha))

    def one(x):
        return np.ones_like(np.asarray(x, dtype=float))

    def zero(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    problem = FocpProblem(
        t_f=1.0,
        alpha=alpha,
        initial_values=[0.0] * m,
        integrand=lambda t, x, u: -ln2 * x,
        dynamics=lambda t, x, u: ln2 * (x + u),
        constraints=(
            lambda t, x, a, u: u - 1.0,
            lambda t, x, a, u: -u - 1.0,
            lambda t, x, a, u: x + u - 2.0,
        ),
        partials={
            ("f", 1): lambda t, x, u: -ln2 * one(x),
            ("f", 2): lambda t, x, u: zero(x),
            ("g", 1): lambda t, x, u: ln2 * one(x),
            ("g", 2): lambda t, x, u: ln2 * one(x),
            (("H", 0), 1): lambda t, x, a, u: zero(x),
            (("H", 0), 2): lambda t, x, a, u: zero(x),
            (("H", 0), 3): lambda t, x, a, u: one(x),
            (("H", 1), 1): lambda t, x, a, u: zero(x),
            (("H", 1), 2): lambda t, x, a, u: zero(x),
            (("H", 1), 3): lambda t, x, a, u: -one(x),
            (("H", 2), 1): lambda t, x, a, u: one(x),
            (("H", 2), 2): lambda t, x, a, u: zero(x),
            (("H", 2), 3): lambda t, x, a, u: one(x),
        },
        name="ex2",
    )
    if alpha == 1.0:
        return ExampleCase(
            id="ex2",
            problem=problem,
            exact_state=lambda t: 2.0 ** np.asarray(t) - 1.0,
            exact_control=lambda t: np.ones_like(np.asarray(t, dtype=float)),
            exact_objective=math.log(2.0) - 1.0,
        )
    return ExampleCase(id="ex2", problem=problem)


def _example3() -> ExampleCase:
    c = 8000.0 / (77.0 * gamma(0.1))

    def shift(t, u):
        return u + 1.0 - t + t**4 - c * t**2.1

    def f(t, x, u):
        return np.exp(t) * (x - t**4 + t - 1.0) ** 2 + (1.0 + t**2) * shift(t, u) ** 2

    problem = FocpProblem(
        t_f=1.0,
        alpha=1.9,
        initial_values=[1.0, -1.0],
        integrand=f,
        dynamics=lambda t, x, u: x + u,
        partials={
            ("f", 1): lambda t, x, u: 2.0 * np.exp(t) * (x - t**4 + t - 1.0),
            ("f", 2): lambda t, x, u: 2.0 * (1.0 + t**2) * shift(t, u),
            ("g", 1): lambda t, x, u: np.ones_like(np.asarray(x, dtype=float)),
            ("g", 2): lambda t, x, u: np.ones_like(np.asarray(x, dtype=float)),
        },
        name="ex3",
    )
    return ExampleCase(
        id="ex3",
        problem=problem,
        exact_state=lambda t: 1.0 - np.asarray(t) + np.asarray(t) ** 4,
        exact_control=lambda t: -1.0 + np.asarray(t) - np.asarray(t) ** 4 + c * np.asarray(t) ** 2.1,
        exact_objective=0.0,
    )


def get_example(example_id: str, alpha: float = 1.0) -> ExampleCase:
    """Return a registered benchmark case; ``alpha`` only affects ``ex2``."""
    if example_id == "ex1":
        return _example1()
    if example_id == "ex2":
        return _example2(alpha)
    if example_id == "ex3":
        return _example3()
    raise KeyError(f"unknown example {example_id!r}; choose from {', '.join(EXAMPLE_IDS)}")


def error_l2(solution: Solution, exact: Callable, which: str = "state", basis=None) -> float:
    """Root-mean-square nodal error over nodes ``1..n`` (node 0 excluded)."""
    if which not in ("state", "control"):
        raise ValueError("which must be 'state' or 'control'")
    basis = basis or solution.discretization.basis
    nodes = basis.nodes[1:]
    numeric = (solution.state if which == "state" else solution.point.u)[1:]
    err = np.asarray(exact(nodes), dtype=float) - numeric
    return float(np.sqrt(np.mean(err**2)))


def convergence_order(e_n: float, e_2n: float) -> float:
    """Observed order ``log2(E_n / E_2n)``."""
    if not (e_n > 0 and e_2n > 0):
        raise ValueError(f"errors must be positive, got {e_n!r} and {e_2n!r}")
    return math.log2(e_n / e_2n)


def _order_or_none(e_n, e_2n):
    try:
        return convergence_order(e_n, e_2n)
    except (TypeError, ValueError):
        return None


def run_table(
    case: ExampleCase,
    n_values: Sequence[int],
    config: SolverConfig | None = None,
    warm_start: bool | None = None,
    facility: DerivativeFacility | None = None,
) -> list[ErrorReport]:
    """Solve ``case`` at each resolution and tabulate errors and orders.

    With warm starting, each solve begins from the previous converged row
    prolonged to the new grid. Without it, a failed cold start is retried
    once from the previous row before the row is marked failed.
    """
    n_values = [int(n) for n in n_values]
    if any(n < 2 or n % 2 for n in n_values):
        raise ValueError("n values must be even and >= 2")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n values must be increasing")
    config = config or SolverConfig()
    warm = case.warm_start if warm_start is None else warm_start
    reports: list[ErrorReport] = []
    previous: Solution | None = None
    for n in n_values:
        disc = discretize(case.problem, n)
        starts = []
        if warm and previous is not None:
            starts.append(prolong(previous, disc))
        else:
            starts.append(None)
            if previous is not None:
                starts.append(prolong(previous, disc))
        solution = None
        message = ""
        elapsed = 0.0
        for start in starts:
            began = time.perf_counter()
            try:
                candidate = solve(disc, case.problem, facility, replace(config, initial_point=start))
            except (SolverError, FloatingPointError, ArithmeticError) as exc:
                elapsed += time.perf_counter() - began
                message = str(exc)
                continue
            elapsed += time.perf_counter() - began
            solution = candidate
            message = candidate.message
            if candidate.converged:
                break
        if solution is None or not solution.converged:
            reports.append(
                ErrorReport(n, None, None, None, None, solution.objective if solution else None, elapsed, False,
                            solution.iterations if solution else 0, message)
            )
            continue
        previous = solution
        e_x = error_l2(solution, case.exact_state, "state") if case.exact_state else None
        e_u = error_l2(solution, case.exact_control, "control") if case.exact_control else None
        reports.append(ErrorReport(n, e_x, e_u, None, None, solution.objective, elapsed, True, solution.iterations, message))
    for row, nxt in zip(reports, reports[1:]):
        if nxt.n == 2 * row.n and row.converged and nxt.converged:
            row.order_x = _order_or_none(row.e_x, nxt.e_x)
            row.order_u = _order_or_none(row.e_u, nxt.e_u)
    return reports


def _fmt(value, digits):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "NA"
    return f"{value:.{digits}g}"


def _row(report: ErrorReport) -> list[str]:
    return [
        str(report.n),
        _fmt(report.e_x, 6),
        _fmt(report.order_x, 6),
        _fmt(report.e_u, 6),
        _fmt(report.order_u, 6),
        _fmt(report.j_n, 7),
        f"{report.cpu_seconds:.3f}",
    ]


def write_csv(reports: Sequence[ErrorReport], stream=None) -> str:
    """Write the table as CSV to ``stream`` (if given) and return the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow(_row(report))
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def format_table(reports: Sequence[ErrorReport], title: str = "") -> str:
    """Plain-text convergence table, one row per resolution."""
    header = ("n", "E_n(x)", "eps_n(x)", "E_n(u)", "eps_n(u)", "J_n", "CPU (s)")
    rows = []
    for r in reports:
        cells = [
            str(r.n),
            _fmt(r.e_x, 3),
            "---" if r.order_x is None else f"{r.order_x:.2f}",
            _fmt(r.e_u, 3),
            "---" if r.order_u is None else f"{r.order_u:.2f}",
            _fmt(r.j_n, 7),
            f"{r.cpu_seconds:.3f}",
        ]
        if not r.converged:
            cells[-1] += "  FAILED: " + r.message
        rows.append(cells)
    widths = [max(len(h), *(len(c[i]) for c in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = [title] if title else []
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(cells, widths)) for cells in rows)
    return "\n".join(lines)
