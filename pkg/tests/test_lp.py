import os
import tempfile

import numpy as np
import pytest
import scipy.optimize

from pcp_bnp.lp import LpProblem, LpIterationLimit, solve_lp, kkt_residuals
from pcp_bnp.lp import format_lp, write_lp
from pcp_bnp.lp import LE, EQ, GE, OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT


def random_lp(seed, n=6, m_ub=5, m_eq=2):
    """A feasible, bounded random LP and its dense data for `linprog`."""
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, 4.0, n)

    A_ub = rng.integers(-3, 4, size=(m_ub, n)).astype(float)
    b_ub = A_ub @ x0 + rng.uniform(0.0, 2.0, m_ub)
    A_eq = rng.integers(-3, 4, size=(m_eq, n)).astype(float)
    b_eq = A_eq @ x0
    c = rng.integers(-5, 6, size=n).astype(float)

    problem = LpProblem("random")
    for j in range(n):
        problem.add_variable(cost=c[j], lower=0.0, upper=5.0)

    for A, b, sense in ((A_ub, b_ub, LE), (A_eq, b_eq, EQ)):
        for row, rhs in zip(A, b):
            problem.add_row(sense, [(j, a) for j, a in enumerate(row)], rhs)

    return problem, (c, A_ub, b_ub, A_eq, b_eq)


@pytest.mark.parametrize("seed", range(20))
def test_matches_linprog(seed):
    problem, (c, A_ub, b_ub, A_eq, b_eq) = random_lp(seed)
    expected = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                                      bounds=[(0.0, 5.0)] * len(c), method="highs")
    assert expected.status == 0

    sol = solve_lp(problem)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(expected.fun, abs=1e-6)

    residuals = kkt_residuals(problem, sol)
    assert all(r <= 1e-6 for r in residuals.values()), residuals


@pytest.mark.parametrize("seed", range(5))
def test_dual_signs_and_strong_duality(seed):
    rng = np.random.default_rng(seed)
    n, m = 5, 4
    A = rng.uniform(0.5, 2.0, size=(m, n))
    b = rng.uniform(1.0, 3.0, m)
    c = rng.uniform(1.0, 2.0, n)

    problem = LpProblem()
    for j in range(n):
        problem.add_variable(cost=c[j])
    for i in range(m):
        problem.add_row(GE, [(j, A[i, j]) for j in range(n)], b[i])

    sol = solve_lp(problem)
    assert sol.status == OPTIMAL
    assert np.all(sol.duals >= -1e-9)
    assert sol.objective == pytest.approx(float(b @ sol.duals), abs=1e-6)


def test_single_variable():
    problem = LpProblem()
    x = problem.add_variable(cost=1.0)
    problem.add_row(GE, [(x, 1.0)], 3.0)

    sol = solve_lp(problem)
    assert sol.status == OPTIMAL
    assert sol.x[x] == pytest.approx(3.0)
    assert sol.duals[0] == pytest.approx(1.0)


def test_no_rows():
    problem = LpProblem()
    problem.add_variable(cost=1.0, lower=2.0)
    problem.add_variable(cost=-1.0, upper=4.0)

    sol = solve_lp(problem)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-2.0)


def test_infeasible():
    problem = LpProblem()
    x = problem.add_variable(cost=1.0)
    problem.add_row(LE, [(x, 1.0)], -1.0)

    assert solve_lp(problem).status == INFEASIBLE


def test_unbounded():
    problem = LpProblem()
    x = problem.add_variable(cost=-1.0)
    y = problem.add_variable(cost=0.0)
    problem.add_row(LE, [(x, 1.0), (y, -1.0)], 1.0)

    assert solve_lp(problem).status == UNBOUNDED


def test_iteration_limit():
    problem, _ = random_lp(0)
    sol = solve_lp(problem, iteration_limit=0)

    assert sol.status == ITERATION_LIMIT
    with pytest.raises(LpIterationLimit):
        sol.raise_for_status()


def test_warm_start_after_adding_columns_and_rows():
    problem = LpProblem()
    tau = problem.add_variable(cost=1.0)
    cover = problem.add_row(EQ, [], 1.0)
    x = problem.add_variable(cost=0.0, entries=[(cover, 1.0)])
    problem.add_row(LE, [(x, 5.0), (tau, -1.0)], 0.0)

    first = solve_lp(problem)
    assert first.objective == pytest.approx(5.0)

    time_row = problem.add_row(LE, [(tau, -1.0)], 0.0)
    problem.add_variable(cost=0.0, entries=[(cover, 1.0), (time_row, 2.0)])

    warm = solve_lp(problem, warm_start=first.basis)
    cold = solve_lp(problem)

    assert warm.status == OPTIMAL
    assert warm.objective == pytest.approx(cold.objective)
    assert warm.objective == pytest.approx(10.0 / 7.0)
    assert warm.duals == pytest.approx(cold.duals, abs=1e-9)


def test_invalid_inputs():
    problem = LpProblem()
    with pytest.raises(ValueError):
        problem.add_variable(lower=1.0, upper=0.0)
    with pytest.raises(ValueError):
        problem.add_row("<", [], 0.0)
    with pytest.raises(ValueError):
        problem.add_row(LE, [(3, 1.0)], 0.0)
    with pytest.raises(ValueError):
        problem.add_variable(entries=[(5, 1.0)])


def test_format_lp():
    problem = LpProblem("tiny")
    x = problem.add_variable(cost=1.0, name="x")
    y = problem.add_variable(cost=0.0, lower=-np.inf, upper=np.inf, name="y")
    problem.add_row(GE, [(x, 2.0), (y, -1.0)], 3.0, name="c0")

    text = format_lp(problem)
    assert text.startswith("\\ tiny\nMinimize\n obj: + 1 x\n")
    assert " c0: + 2 x - 1 y >= 3" in text
    assert " y free" in text
    assert text.endswith("End\n")

    with tempfile.TemporaryDirectory(prefix="test_pcp_lp") as d:
        filename = os.path.join(d, "tiny.lp")
        write_lp(problem, filename)
        with open(filename) as f:
            assert f.read() == text
