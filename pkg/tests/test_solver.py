import math

import numpy as np
import pytest

from focsolve.bench import error_l2, get_example
from focsolve.discretizer import (
    KktPoint,
    constraint_values,
    discretize,
    dynamics_residual,
)
from focsolve.problem import DerivativeFacility, FocpProblem
from focsolve.solver import (
    SingularJacobianError,
    SolverConfig,
    prolong,
    reconstruct,
    solve,
    solve_constrained,
    solve_unconstrained,
)


def _solve_case(case, n, **kwargs):
    disc = discretize(case.problem, n)
    return disc, solve(disc, case.problem, config=SolverConfig(**kwargs) if kwargs else None)


def test_example3_n4_objective():
    disc, sol = _solve_case(get_example("ex3"), 4)
    assert sol.converged
    assert sol.objective == pytest.approx(9.64314e-7, abs=1e-11)


def test_trivial_tracking_problem():
    p = FocpProblem(1.0, 0.8, [0.0], lambda t, x, u: (u - 1.0) ** 2, lambda t, x, u: u)
    disc = discretize(p, 8)
    sol = solve_unconstrained(disc, p)
    assert sol.converged
    np.testing.assert_allclose(sol.control, 1.0, atol=1e-10)
    assert sol.objective <= 1e-12


def test_example1_error_and_order():
    case = get_example("ex1")
    errs = []
    for n in (16, 32):
        disc, sol = _solve_case(case, n)
        assert sol.converged
        errs.append(error_l2(sol, case.exact_state))
    assert 0.243 / 2 <= errs[0] <= 0.243 * 2
    assert math.log2(errs[0] / errs[1]) == pytest.approx(3.09, abs=0.5)


def test_example2_constrained_n2(example2_problem):
    disc = discretize(example2_problem, 2)
    sol = solve_constrained(disc, example2_problem)
    assert sol.converged
    assert sol.objective == pytest.approx(-0.3063957, abs=1e-5)
    np.testing.assert_allclose(sol.control, 1.0, atol=1e-6)
    np.testing.assert_allclose(sol.point.a, [0.6931472, 0.9795332, 1.3859775], atol=1e-5)


@pytest.mark.slow
def test_example2_constrained_n32(example2_problem):
    disc = discretize(example2_problem, 32)
    sol = solve(disc, example2_problem)
    assert sol.converged
    assert sol.objective == pytest.approx(-0.3068528, abs=5e-7)


def test_inactive_constraints_match_unconstrained():
    case = get_example("ex3")
    disc = discretize(case.problem, 8)
    free = solve_unconstrained(disc, case.problem)
    boxed_problem = FocpProblem(
        t_f=case.problem.t_f,
        alpha=case.problem.alpha,
        initial_values=case.problem.initial_values,
        integrand=case.problem.integrand,
        dynamics=case.problem.dynamics,
        constraints=(lambda t, x, a, u: u - 10.0, lambda t, x, a, u: -u - 10.0),
        partials=case.problem.partials,
    )
    boxed = solve_constrained(discretize(boxed_problem, 8), boxed_problem)
    assert boxed.converged
    np.testing.assert_allclose(boxed.point.a, free.point.a, atol=1e-6)
    np.testing.assert_allclose(boxed.control, free.control, atol=1e-6)


def test_dispatch_guards(example2_problem):
    disc = discretize(example2_problem, 2)
    with pytest.raises(ValueError):
        solve_unconstrained(disc, example2_problem)
    p = get_example("ex3").problem
    with pytest.raises(ValueError):
        solve_constrained(discretize(p, 2), p)


def test_reconstruct_at_nodes_and_between():
    disc, sol = _solve_case(get_example("ex3"), 8)
    for j, t in enumerate(disc.theta):
        x, u = reconstruct(disc, sol, t)
        assert x == sol.state[j]
        assert u == sol.control[j]
    t = 0.3 * disc.basis.h  # inside the first pair of subintervals
    x, _ = reconstruct(disc, sol, t)
    nodes = disc.theta[:3]
    coeffs = np.polyfit(nodes, sol.state[:3], 2)
    assert x == pytest.approx(np.polyval(coeffs, t), abs=1e-12)
    with pytest.raises(ValueError):
        reconstruct(disc, sol, disc.basis.t_f + 1.0)


def test_reconstruct_example2_midpoint(example2_problem):
    disc = discretize(example2_problem, 2)
    sol = solve(disc, example2_problem)
    x, u = reconstruct(disc, sol, 0.5)
    assert x == pytest.approx(2**0.5 - 1, abs=8.1e-4)
    assert u == pytest.approx(1.0, abs=1e-6)


def test_newton_quadratic_tail():
    disc, sol = _solve_case(get_example("ex3"), 8)
    hist = sol.residual_history
    assert sol.converged and len(hist) >= 3
    # the final entry is the converged iterate; the tail is the step into it
    r_prev, r_last = hist[-3], hist[-2]
    assert r_last <= 1e3 * r_prev**2


@pytest.mark.parametrize("name", ["ex1", "ex3"])
def test_feasibility_at_convergence(name):
    case = get_example(name)
    disc, sol = _solve_case(case, 16)
    assert sol.converged
    assert np.max(np.abs(dynamics_residual(disc, case.problem, sol.point))) <= 1e-10


def test_constrained_feasibility(example2_problem):
    disc = discretize(example2_problem, 8)
    sol = solve(disc, example2_problem)
    assert sol.converged
    assert np.max(constraint_values(disc, example2_problem, sol.point)) <= 1e-10
    assert np.max(np.abs(dynamics_residual(disc, example2_problem, sol.point))) <= 1e-10


def test_lower_order_problem_converges(lower_order_problem):
    disc = discretize(lower_order_problem, 8)
    sol = solve(disc, lower_order_problem, DerivativeFacility(mode="finite-difference"))
    assert sol.converged
    assert len(sol.lower) == 1 and sol.lower[0].shape == (9,)


def test_determinism(lower_order_problem):
    disc = discretize(lower_order_problem, 6)
    fac = DerivativeFacility(mode="finite-difference")
    s1 = solve(disc, lower_order_problem, fac)
    s2 = solve(disc, lower_order_problem, fac)
    assert s1.point.to_vector().tobytes() == s2.point.to_vector().tobytes()
    assert s1.residual_history == s2.residual_history


def test_singular_jacobian():
    zero = lambda t, x, u: np.zeros_like(x)  # noqa: E731
    p = FocpProblem(1.0, 1.0, [0.0], zero, lambda t, x, u: u)
    disc = discretize(p, 4)
    start = KktPoint(np.ones(5), np.ones(5), np.ones(5))
    with pytest.raises(SingularJacobianError) as info:
        solve_unconstrained(disc, p, config=SolverConfig(initial_point=start))
    assert info.value.iteration == 1


def test_iteration_cap_reports_not_converged():
    disc, sol = _solve_case(get_example("ex3"), 8, max_iterations=1)
    assert not sol.converged
    assert sol.iterations == 1
    assert "maximum iterations" in sol.message


@pytest.mark.parametrize(
    "kwargs",
    [
        {"residual_tol": 0.0},
        {"penalty_growth": 1.0},
        {"line_search": "wolfe"},
        {"max_iterations": 0},
        {"outer_iterations": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_prolong_carries_solution():
    case = get_example("ex3")
    coarse_disc, coarse = _solve_case(case, 8)
    fine = discretize(case.problem, 16)
    start = prolong(coarse, fine)
    np.testing.assert_array_equal(start.a[::2], coarse.point.a)
    sol = solve(fine, case.problem, config=SolverConfig(initial_point=start))
    assert sol.converged
    assert sol.iterations <= 3
    other = discretize(
        FocpProblem(2.0, 1.9, [1.0, -1.0], lambda t, x, u: x, lambda t, x, u: u), 16
    )
    with pytest.raises(ValueError):
        prolong(coarse, other)
