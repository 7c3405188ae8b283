"""Command-line entry point: ``focsolve solve`` and ``focsolve bench``.

Exit codes: 0 converged, 1 usage or input error, 2 numerical failure.
The environment variable ``FOCSOLVE_TOL`` overrides the residual tolerance.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import EXAMPLE_IDS, format_table, get_example, run_table, write_csv
from .discretizer import KktPoint, discretize
from .expr_lang import ExprEvalError
from .problem_file import ProblemFileError, constant_point, load_problem_file
from .solver import SolverConfig, SolverError, reconstruct, solve

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="focsolve", description="Fractional optimal control with modified hat functions.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("file")
    p_solve.add_argument("--samples", type=int, default=None, help="write N uniformly spaced reconstructed rows")
    p_solve.add_argument("--out", default=None, help="solution file path (default: <file>.sol)")

    p_bench = sub.add_parser("bench", help="run a built-in convergence table")
    p_bench.add_argument("example", help="one of " + ", ".join(EXAMPLE_IDS))
    p_bench.add_argument("--n", required=True, help="comma-separated even resolutions, e.g. 4,8,16")
    p_bench.add_argument("--out", default=None, help="CSV path (default: <example>_table.csv)")
    p_bench.add_argument("--warm-start", action="store_true", help="start each row from the previous one")
    p_bench.add_argument("--alpha", type=float, default=1.0, help="order for ex2 (default 1)")
    return parser


def _env_tol(default: float) -> float:
    raw = os.environ.get("FOCSOLVE_TOL")
    if raw is None:
        return default
    try:
        tol = float(raw)
    except ValueError:
        raise _UsageError(f"FOCSOLVE_TOL is not a number: {raw!r}") from None
    if not tol > 0:
        raise _UsageError("FOCSOLVE_TOL must be positive")
    return tol


def _write_solution(path: Path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("# t x u\n")
        for t, x, u in rows:
            fh.write(f"{t:.15g} {x:.15g} {u:.15g}\n")


def cmd_solve(args) -> int:
    try:
        doc = load_problem_file(args.file)
    except ProblemFileError as exc:
        print(f"error: {args.file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.samples is not None and args.samples < 2:
        print("error: --samples must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    disc = discretize(doc.problem, doc.n)
    config = SolverConfig(residual_tol=_env_tol(doc.tol if doc.tol is not None else 1e-10))
    if doc.max_iter is not None:
        config = replace(config, max_iterations=doc.max_iter)
    if doc.initial is not None:
        config = replace(config, initial_point=KktPoint(*constant_point(disc.size, doc.initial)))
    try:
        solution = solve(disc, doc.problem, None, config)
    except (SolverError, ExprEvalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.samples is None:
        rows = zip(disc.theta, solution.state, solution.point.u)
    else:
        t = np.linspace(0.0, disc.basis.t_f, args.samples)
        x, u = reconstruct(disc, solution, t)
        rows = zip(t, x, u)
    out = Path(args.out) if args.out else Path(str(args.file) + ".sol")
    _write_solution(out, rows)
    print(f"J = {solution.objective:.7g}")
    print(f"iterations = {solution.iterations}")
    print(f"residual = {solution.final_residual:.3e}")
    print(f"solution written to {out}")
    if not solution.converged:
        print(f"not converged: {solution.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.example not in EXAMPLE_IDS:
        print(f"error: unknown example {args.example!r}; choose from {', '.join(EXAMPLE_IDS)}", file=sys.stderr)
        return EXIT_INPUT
    try:
        n_values = [int(v) for v in args.n.split(",") if v.strip()]
    except ValueError:
        print(f"error: --n must be a comma-separated list of integers, got {args.n!r}", file=sys.stderr)
        return EXIT_INPUT
    case = get_example(args.example, alpha=args.alpha)
    config = SolverConfig(residual_tol=_env_tol(1e-10))
    try:
        reports = run_table(case, n_values, config, warm_start=True if args.warm_start else None)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out) if args.out else Path(f"{args.example}_table.csv")
    with open(out, "w", newline="") as fh:
        write_csv(reports, fh)
    print(format_table(reports, title=f"{args.example}: convergence table"))
    print(f"CSV written to {out}")
    return EXIT_OK if all(r.converged for r in reports) else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_INPUT
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_bench(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
