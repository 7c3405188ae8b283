"""Line-oriented ``key = value`` problem files.

Example (the |u| <= 1 bound is written as two one-sided constraints)::

    # min -ln2 * x  s.t.  D^1 x = ln2 (x + u),  x(0) = 0
    tf = 1
    alpha = 1
    q = 0
    n = 2
    f = -ln(2)*x
    g = ln(2)*(x + u)
    constraint = u - 1
    constraint = -u - 1
    constraint = x + u - 2
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr_lang import ExprSyntaxError, evaluate, parse, variables
from .problem import FocpProblem, validate

__all__ = ["ProblemFile", "ProblemFileError", "load_problem_file", "parse_problem_text"]

_REQUIRED = ("tf", "alpha", "q", "n", "f", "g")
_OPTIONAL = ("alphas", "tol", "max_iter", "initial")
_REPEATABLE = ("constraint",)


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


@dataclass
class ProblemFile:
    problem: FocpProblem
    n: int
    tol: float | None = None
    max_iter: int | None = None
    initial: tuple | None = None
    sources: dict = field(default_factory=dict)


def _number(text, key, line):
    try:
        return float(text)
    except ValueError:
        raise ProblemFileError(f"{key} must be a number, got {text!r}", line) from None


def _numbers(text, key, line):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ProblemFileError(f"{key} must be a comma-separated list of numbers", line)
    return [_number(p, key, line) for p in parts]


def _compile(source, key, line, value_col, allowed):
    try:
        tree = parse(source)
    except ExprSyntaxError as exc:
        raise ProblemFileError(f"{key}: {exc}", line, value_col + exc.offset + 1) from None
    bad = variables(tree) - set(allowed)
    if bad:
        raise ProblemFileError(
            f"{key} uses {', '.join(sorted(bad))}; allowed variables are {', '.join(allowed)}", line
        )
    return tree


def parse_problem_text(text: str) -> ProblemFile:
    """Parse problem-file text; errors carry the line (and column) number."""
    entries: dict = {}
    constraints = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            raise ProblemFileError("expected 'key = value'", lineno)
        key, value = body.split("=", 1)
        key = key.strip()
        value_col = len(body) - len(body.split("=", 1)[1]) + (len(value) - len(value.lstrip()))
        value = value.strip()
        if key in _REPEATABLE:
            constraints.append((value, lineno, value_col))
            continue
        if key not in _REQUIRED and key not in _OPTIONAL:
            raise ProblemFileError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ProblemFileError(f"duplicate key {key!r}", lineno)
        entries[key] = (value, lineno, value_col)
    for key in _REQUIRED:
        if key not in entries:
            raise ProblemFileError(f"missing required key {key!r}")

    tf = _number(entries["tf"][0], "tf", entries["tf"][1])
    alpha = _number(entries["alpha"][0], "alpha", entries["alpha"][1])
    q = _numbers(entries["q"][0], "q", entries["q"][1])
    alphas = []
    if "alphas" in entries:
        text, line, _ = entries["alphas"]
        alphas = _numbers(text, "alphas", line)
    n_text, n_line, _ = entries["n"]
    try:
        n = int(n_text)
    except ValueError:
        raise ProblemFileError(f"n must be an even integer, got {n_text!r}", n_line) from None
    if n < 2 or n % 2:
        raise ProblemFileError(f"n must be an even integer >= 2, got {n}", n_line)

    k = len(alphas)
    ds = [f"d{i}" for i in range(1, k + 1)]
    f_src, f_line, f_col = entries["f"]
    g_src, g_line, g_col = entries["g"]
    f_tree = _compile(f_src, "f", f_line, f_col, ["t", "x", "u"])
    g_tree = _compile(g_src, "g", g_line, g_col, ["t", "x", *ds, "u"])
    h_trees = [
        _compile(src, "constraint", line, col, ["t", "x", *ds, "a", "u"]) for src, line, col in constraints
    ]

    def integrand(t, x, u, _tree=f_tree):
        return evaluate(_tree, {"t": t, "x": x, "u": u})

    def dynamics(t, x, *rest, _tree=g_tree):
        bind = {"t": t, "x": x, "u": rest[-1]}
        bind.update(zip(ds, rest[:-1]))
        return evaluate(_tree, bind)

    def make_constraint(tree):
        def constraint(t, x, *rest):
            bind = {"t": t, "x": x, "a": rest[-2], "u": rest[-1]}
            bind.update(zip(ds, rest[:-2]))
            return evaluate(tree, bind)

        return constraint

    problem = FocpProblem(
        t_f=tf,
        alpha=alpha,
        initial_values=q,
        integrand=integrand,
        dynamics=dynamics,
        lower_orders=alphas,
        constraints=[make_constraint(tr) for tr in h_trees],
    )
    errors = validate(problem)
    if errors:
        raise ProblemFileError("; ".join(errors))

    tol = _number(entries["tol"][0], "tol", entries["tol"][1]) if "tol" in entries else None
    max_iter = None
    if "max_iter" in entries:
        text, line, _ = entries["max_iter"]
        try:
            max_iter = int(text)
        except ValueError:
            raise ProblemFileError(f"max_iter must be an integer, got {text!r}", line) from None
    initial = None
    if "initial" in entries:
        text, line, _ = entries["initial"]
        if text.lower() != "zeros":
            vals = _numbers(text, "initial", line)
            if len(vals) != 3:
                raise ProblemFileError("initial must be 'zeros' or three constants a,u,lambda", line)
            initial = tuple(vals)
    sources = {key: entries[key][0] for key in ("f", "g") if key in entries}
    sources["constraints"] = [c[0] for c in constraints]
    return ProblemFile(problem=problem, n=n, tol=tol, max_iter=max_iter, initial=initial, sources=sources)


def load_problem_file(path) -> ProblemFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem_text(text)


def constant_point(size: int, values) -> tuple:
    """Nodal vectors filled with the three constants of an ``initial`` entry."""
    return tuple(np.full(size, float(v)) for v in values)
