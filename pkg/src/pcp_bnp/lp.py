"""A sparse, bounded-variable revised simplex with exact row duals.

Problems are always minimizations

    min  c^T x   s.t.   A x (<=, =, >=) b,   l <= x <= u.

Every row gets a logical variable `s` with `A x + s = b`, bounded by
`[0, inf)` for `<=`, `(-inf, 0]` for `>=` and `[0, 0]` for `=` rows. With this
choice the row duals `y = c_B B^{-1}` carry the textbook signs: `y <= 0` on
`<=` rows, `y >= 0` on `>=` rows and free on equality rows.

The basis is kept as a sparse LU factorization (`scipy.sparse.linalg.splu`)
followed by an eta file of product-form updates; it is refactorized every
`refactor_interval` pivots.
"""
import dataclasses
from typing import FrozenSet, Optional, Tuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from pcp_bnp import logger
from .io import write_something


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

LE, EQ, GE = "<=", "=", ">="

FEAS_TOL = 1e-7
DUAL_TOL = 1e-7
PIVOT_TOL = 1e-9

# Consecutive degenerate pivots before switching to Bland's rule.
DEGENERACY_LIMIT = 50

_BASIC, _AT_LOWER, _AT_UPPER, _FREE, _FIXED = range(5)


class LpError(RuntimeError):
    pass


class LpIterationLimit(LpError):
    pass


class LpProblem:
    """A minimization LP assembled row by row and column by column."""

    def __init__(self, name="lp"):
        self.name = name

        self.costs = []
        self.lower = []
        self.upper = []
        self.var_names = []

        self.senses = []
        self.rhs = []
        self.row_names = []

        self._rows = []
        self._cols = []
        self._vals = []

    @property
    def num_variables(self):
        return len(self.costs)

    @property
    def num_rows(self):
        return len(self.senses)

    def add_variable(self, cost=0.0, lower=0.0, upper=np.inf, name=None, entries=()):
        """Add a variable with coefficients `entries = [(row, coef), ...]`."""
        if lower > upper:
            raise ValueError(f"Invalid bounds [{lower}, {upper}] for '{name}'.")

        j = self.num_variables
        self.costs.append(float(cost))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.var_names.append(name or f"x{j}")

        for i, coef in entries:
            if not 0 <= i < self.num_rows:
                raise ValueError(f"Variable '{name}' references unknown row {i}.")
            self._append(i, j, coef)

        return j

    def add_row(self, sense, entries, rhs, name=None):
        """Add a row with coefficients `entries = [(variable, coef), ...]`."""
        if sense not in (LE, EQ, GE):
            raise ValueError(f"Unknown row sense '{sense}'.")

        i = self.num_rows
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"r{i}")

        for j, coef in entries:
            if not 0 <= j < self.num_variables:
                raise ValueError(f"Row '{name}' references unknown variable {j}.")
            self._append(i, j, coef)

        return i

    def _append(self, i, j, coef):
        if coef != 0.0:
            self._rows.append(i)
            self._cols.append(j)
            self._vals.append(float(coef))

    def matrix(self):
        """The constraint matrix as CSC, duplicate entries summed."""
        return scipy.sparse.csc_matrix(
            (self._vals, (self._rows, self._cols)),
            shape=(self.num_rows, self.num_variables)
        )

    def row_activity(self, x):
        return self.matrix() @ np.asarray(x, dtype=float)


@dataclasses.dataclass(frozen=True)
class WarmStart:
    """A basis that survives adding rows and columns.

    Structural variable `j` is labelled `j`, the logical of row `i` is
    labelled `-(i + 1)`.
    """
    basic: Tuple[int, ...]
    at_upper: FrozenSet[int] = frozenset()


@dataclasses.dataclass
class LpSolution:
    status: str
    x: np.ndarray
    duals: np.ndarray
    objective: float
    reduced_costs: np.ndarray
    basis: Optional[WarmStart] = None
    iterations: int = 0

    @property
    def is_optimal(self):
        return self.status == OPTIMAL

    def raise_for_status(self):
        if self.status == ITERATION_LIMIT:
            raise LpIterationLimit(
                f"Simplex hit its iteration limit ({self.iterations})."
            )


def _slack_bounds(sense):
    if sense == LE:
        return 0.0, np.inf
    elif sense == GE:
        return -np.inf, 0.0
    else:
        return 0.0, 0.0


def _initial_state(lower, upper):
    if lower == upper:
        return _FIXED, lower
    elif np.isfinite(lower):
        return _AT_LOWER, lower
    elif np.isfinite(upper):
        return _AT_UPPER, upper
    else:
        return _FREE, 0.0


class _Simplex:
    def __init__(self, problem, iteration_limit, refactor_interval):
        self.m = problem.num_rows
        self.n = problem.num_variables
        self.b = np.array(problem.rhs, dtype=float)
        self.problem = problem

        m, n = self.m, self.n
        self.A_core = scipy.sparse.hstack(
            [problem.matrix(), scipy.sparse.identity(m, format="csc")], format="csc"
        )
        self.A = None
        self.At = None

        slack_bounds = [_slack_bounds(s) for s in problem.senses]
        self.lb = np.concatenate([problem.lower, [lo for lo, _ in slack_bounds],
                                  np.zeros(m)])
        self.ub = np.concatenate([problem.upper, [up for _, up in slack_bounds],
                                  np.zeros(m)])
        self.c = np.concatenate([problem.costs, np.zeros(2 * m)])

        self.x = np.zeros(n + 2 * m)
        self.state = np.full(n + 2 * m, _FIXED, dtype=np.int8)
        self.basis = np.zeros(m, dtype=np.int64)

        self.iterations = 0
        self.iteration_limit = iteration_limit
        self.refactor_interval = refactor_interval
        self.use_bland = False
        self._degenerate = 0

    # -- setup ------------------------------------------------------------
    def start(self, warm_start):
        """Set up the initial basis.

        Returns whether phase 1 is needed, or `None` if the basis is unusable.
        """
        n, m = self.n, self.m

        for j in range(n + m):
            self.state[j], self.x[j] = _initial_state(self.lb[j], self.ub[j])

        if warm_start is not None:
            basis = self._basis_from_labels(warm_start)
            if basis is None:
                return None

            for label in warm_start.at_upper:
                j = self._index(label)
                if j is not None and np.isfinite(self.ub[j]) and j not in basis:
                    self.state[j], self.x[j] = _AT_UPPER, self.ub[j]
        else:
            basis = list(range(n, n + m))

        self.basis = np.array(basis, dtype=np.int64)
        self.state[self.basis] = _BASIC
        self.x[self.basis] = 0.0

        try:
            self._factorize(self.A_core)
        except LpError:
            return None

        self._recompute_basics(self.A_core)
        sigma = np.ones(m)
        needs_phase1 = False

        for r, j in enumerate(self.basis):
            if self._within_bounds(j):
                continue

            if not n <= j < n + m:
                return None

            # Swap the infeasible logical for an artificial of the same row.
            i = j - n
            value = self.x[j]
            bound = self.lb[j] if value < self.lb[j] else self.ub[j]
            sigma[i] = 1.0 if value > bound else -1.0

            self.x[j] = bound
            self.state[j] = _AT_LOWER if bound == self.lb[j] else _AT_UPPER
            if self.lb[j] == self.ub[j]:
                self.state[j] = _FIXED

            a = n + m + i
            self.basis[r] = a
            self.state[a] = _BASIC
            self.ub[a] = np.inf
            self.x[a] = abs(value - bound)
            needs_phase1 = True

        self.A = scipy.sparse.hstack(
            [self.A_core, scipy.sparse.diags(sigma, format="csc")], format="csc"
        )
        self.At = self.A.T.tocsr()
        self._factorize(self.A)

        return needs_phase1

    def _index(self, label):
        if label >= 0:
            return label if label < self.n else None

        i = -label - 1
        return self.n + i if i < self.m else None

    def _label(self, j):
        if j < self.n:
            return int(j)
        return -((j - self.n) % self.m) - 1

    def _basis_from_labels(self, warm_start):
        basis = []
        for label in warm_start.basic:
            j = self._index(label)
            if j is None or j in basis:
                return None
            basis.append(j)

        if len(basis) > self.m:
            return None

        present = set(basis)
        for i in range(self.m):
            if len(basis) == self.m:
                break
            if self.n + i not in present:
                basis.append(self.n + i)

        return basis

    def _within_bounds(self, j):
        return self.lb[j] - FEAS_TOL <= self.x[j] <= self.ub[j] + FEAS_TOL

    # -- linear algebra ---------------------------------------------------
    def _factorize(self, A):
        B = A[:, self.basis].tocsc()
        try:
            self.lu = scipy.sparse.linalg.splu(B)
        except RuntimeError as e:
            raise LpError(f"Singular basis: {e}")

        self.etas = []

    def _recompute_basics(self, A):
        x_nonbasic = self.x.copy()
        x_nonbasic[self.basis] = 0.0
        rhs = self.b - A @ x_nonbasic[:A.shape[1]]
        self.x[self.basis] = self._ftran(rhs)

    def _ftran(self, a):
        w = self.lu.solve(np.asarray(a, dtype=float))
        for r, d in self.etas:
            wr = w[r] / d[r]
            w -= d * wr
            w[r] = wr
        return w

    def _btran(self, c):
        z = np.array(c, dtype=float)
        for r, d in reversed(self.etas):
            z[r] = (z[r] - (z @ d - z[r] * d[r])) / d[r]
        return self.lu.solve(z, trans="T")

    def _column(self, j):
        a = np.zeros(self.m)
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        a[self.A.indices[start:end]] = self.A.data[start:end]
        return a

    def _refactor(self):
        self._factorize(self.A)
        self._recompute_basics(self.A)

    # -- iterations -------------------------------------------------------
    def _entering(self, d):
        state = self.state
        can_increase = ((state == _AT_LOWER) | (state == _FREE)) & (d < -DUAL_TOL)
        can_decrease = ((state == _AT_UPPER) | (state == _FREE)) & (d > DUAL_TOL)
        eligible = np.flatnonzero(can_increase | can_decrease)

        if eligible.size == 0:
            return None, 0

        if self.use_bland:
            q = eligible[0]
        else:
            q = eligible[np.argmax(np.abs(d[eligible]))]

        return q, (1.0 if d[q] < 0.0 else -1.0)

    def _ratio_test(self, q, direction, alpha):
        x_B = self.x[self.basis]
        lb_B = self.lb[self.basis]
        ub_B = self.ub[self.basis]
        delta = direction * alpha

        ratios = np.full(self.m, np.inf)
        dec = (delta > PIVOT_TOL) & np.isfinite(lb_B)
        inc = (delta < -PIVOT_TOL) & np.isfinite(ub_B)
        ratios[dec] = (x_B[dec] - lb_B[dec]) / delta[dec]
        ratios[inc] = (ub_B[inc] - x_B[inc]) / -delta[inc]
        ratios = np.maximum(ratios, 0.0)

        theta = ratios.min() if self.m > 0 else np.inf
        flip_range = self.ub[q] - self.lb[q]

        if flip_range <= theta:
            return flip_range, None

        if not np.isfinite(theta):
            return np.inf, None

        ties = np.flatnonzero(ratios <= theta + 1e-12)
        if self.use_bland:
            r = ties[np.argmin(self.basis[ties])]
        else:
            r = ties[np.argmax(np.abs(alpha[ties]))]

        return theta, r

    def iterate(self, costs):
        """Run primal simplex iterations on `costs` from a feasible basis."""
        since_refactor = 0

        while True:
            if self.iterations >= self.iteration_limit:
                return ITERATION_LIMIT

            if since_refactor >= self.refactor_interval:
                self._refactor()
                since_refactor = 0

            y = self._btran(costs[self.basis])
            d = costs - self.At @ y
            q, direction = self._entering(d)
            if q is None:
                return OPTIMAL

            alpha = self._ftran(self._column(q))
            theta, r = self._ratio_test(q, direction, alpha)
            if not np.isfinite(theta):
                return UNBOUNDED

            self.iterations += 1
            self._update_degeneracy(theta)

            self.x[q] += direction * theta
            self.x[self.basis] -= direction * theta * alpha

            if r is None:
                self.state[q] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue

            self._pivot(r, q, alpha, decreasing=direction * alpha[r] > 0)
            since_refactor += 1

    def _pivot(self, r, q, alpha, decreasing):
        leaving = self.basis[r]
        if self.lb[leaving] == self.ub[leaving]:
            self.state[leaving] = _FIXED
            self.x[leaving] = self.lb[leaving]
        elif decreasing:
            self.state[leaving] = _AT_LOWER
            self.x[leaving] = self.lb[leaving]
        else:
            self.state[leaving] = _AT_UPPER
            self.x[leaving] = self.ub[leaving]

        self.basis[r] = q
        self.state[q] = _BASIC
        self.etas.append((r, alpha.copy()))

    def _update_degeneracy(self, theta):
        if theta <= 1e-12:
            self._degenerate += 1
            if self._degenerate > DEGENERACY_LIMIT and not self.use_bland:
                logger.debug("Simplex switches to Bland's rule after degenerate pivots.")
                self.use_bland = True
        else:
            self._degenerate = 0

    # -- phases -----------------------------------------------------------
    def phase1_costs(self):
        costs = np.zeros_like(self.c)
        artificial = slice(self.n + self.m, self.n + 2 * self.m)
        costs[artificial] = np.where(self.ub[artificial] > 0.0, 1.0, 0.0)
        return costs

    def artificial_infeasibility(self):
        return float(self.x[self.n + self.m:].sum())

    def drive_out_artificials(self):
        first_artificial = self.n + self.m
        for r in range(self.m):
            if self.basis[r] < first_artificial:
                continue

            e_r = np.zeros(self.m)
            e_r[r] = 1.0
            row = self.At @ self._btran(e_r)
            row[first_artificial:] = 0.0
            row[self.state == _BASIC] = 0.0

            q = int(np.argmax(np.abs(row)))
            if abs(row[q]) <= 1e-7:
                # Redundant row, the artificial stays basic at zero.
                continue

            alpha = self._ftran(self._column(q))
            leaving = self.basis[r]
            self._pivot(r, q, alpha, decreasing=True)
            self.x[leaving] = 0.0

        artificial = slice(first_artificial, self.n + 2 * self.m)
        self.ub[artificial] = 0.0
        nonbasic = self.state[artificial] != _BASIC
        self.state[artificial][nonbasic] = _FIXED
        self.x[artificial][nonbasic] = 0.0
        self._refactor()

    def warm_start_out(self):
        labels = tuple(self._label(j) for j in self.basis)
        at_upper = frozenset(
            self._label(j) for j in np.flatnonzero(self.state == _AT_UPPER)
            if j < self.n + self.m
        )
        return WarmStart(basic=labels, at_upper=at_upper)


def _solve_without_rows(problem):
    costs = np.array(problem.costs)
    lower = np.array(problem.lower)
    upper = np.array(problem.upper)

    x = np.where(costs > 0.0, lower, np.where(costs < 0.0, upper, 0.0))
    x = np.where(costs == 0.0, np.clip(0.0, lower, upper), x)
    status = OPTIMAL if np.all(np.isfinite(x)) else UNBOUNDED
    x = np.nan_to_num(x)

    return LpSolution(status=status, x=x, duals=np.zeros(0),
                      objective=float(costs @ x), reduced_costs=costs,
                      basis=WarmStart(basic=()))


def solve_lp(problem, warm_start=None, iteration_limit=None, refactor_interval=100):
    """Solve `problem` and return an `LpSolution`.

    When `warm_start` is given and its basis is still primal feasible after
    rows or columns were added, the solve skips phase 1. New rows whose logical
    would be infeasible are repaired with artificials; anything else falls back
    to a cold start.
    """
    m, n = problem.num_rows, problem.num_variables
    if m == 0:
        return _solve_without_rows(problem)

    if iteration_limit is None:
        iteration_limit = 10 * (m + n)

    simplex = _Simplex(problem, iteration_limit, refactor_interval)
    try:
        needs_phase1 = simplex.start(warm_start)
    except LpError:
        needs_phase1 = None

    if needs_phase1 is None:
        logger.debug(f"LP '{problem.name}': warm basis unusable, cold start.")
        simplex = _Simplex(problem, iteration_limit, refactor_interval)
        needs_phase1 = simplex.start(None)

    if needs_phase1:
        status = simplex.iterate(simplex.phase1_costs())
        if status == ITERATION_LIMIT:
            return _result(simplex, ITERATION_LIMIT)

        scale = 1.0 + float(np.max(np.abs(simplex.b)))
        if simplex.artificial_infeasibility() > FEAS_TOL * scale:
            logger.debug(f"LP '{problem.name}' is infeasible.")
            return _result(simplex, INFEASIBLE)

        simplex.drive_out_artificials()

    status = simplex.iterate(simplex.c)
    return _result(simplex, status)


def _result(simplex, status):
    n = simplex.n
    x = simplex.x[:n].copy()

    if status == OPTIMAL:
        y = simplex._btran(simplex.c[simplex.basis])
        basis = simplex.warm_start_out()
    else:
        y = np.zeros(simplex.m)
        basis = None

    reduced_costs = simplex.c[:n] - simplex.At[:n] @ y
    objective = float(simplex.c[:n] @ x)

    logger.debug(
        f"LP '{simplex.problem.name}': {status} after {simplex.iterations} iterations,"
        f" objective {objective:.6g}."
    )

    return LpSolution(status=status, x=x, duals=y, objective=objective,
                      reduced_costs=reduced_costs, basis=basis,
                      iterations=simplex.iterations)


def kkt_residuals(problem, solution):
    """Primal, dual-sign and complementary-slackness residuals of `solution`."""
    A = problem.matrix()
    x = solution.x
    y = solution.duals
    b = np.array(problem.rhs)
    lower = np.array(problem.lower)
    upper = np.array(problem.upper)

    activity = problem.row_activity(x)
    slack = b - activity

    primal = 0.0
    dual_sign = 0.0
    for i, sense in enumerate(problem.senses):
        if sense == LE:
            primal = max(primal, -slack[i])
            dual_sign = max(dual_sign, y[i])
        elif sense == GE:
            primal = max(primal, slack[i])
            dual_sign = max(dual_sign, -y[i])
        else:
            primal = max(primal, abs(slack[i]))

    primal = max(primal, float(np.max(lower - x, initial=0.0)),
                 float(np.max(x - upper, initial=0.0)))

    d = np.array(problem.costs) - A.T @ y
    gap_lower = np.where(np.isfinite(lower), x - lower, np.inf)
    gap_upper = np.where(np.isfinite(upper), upper - x, np.inf)
    at_lower = gap_lower <= FEAS_TOL
    at_upper = gap_upper <= FEAS_TOL

    violation = np.where(at_lower & ~at_upper, np.maximum(-d, 0.0), 0.0)
    violation = np.where(at_upper & ~at_lower, np.maximum(d, 0.0), violation)
    violation = np.where(~at_lower & ~at_upper, np.abs(d), violation)
    dual_sign = max(dual_sign, float(np.max(violation, initial=0.0)))

    row_cs = np.abs(y * slack)
    col_cs = np.abs(d) * np.minimum(gap_lower, gap_upper)
    col_cs = np.where(np.isfinite(col_cs), col_cs, 0.0)
    complementary = max(float(np.max(row_cs, initial=0.0)),
                        float(np.max(col_cs, initial=0.0)))

    return {
        "primal": float(primal),
        "dual_sign": float(dual_sign),
        "complementary": complementary,
    }


def _format_terms(terms, names):
    parts = []
    for j, coef in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {abs(coef):.12g} {names[j]}")
    return " ".join(parts) if parts else "0"


def format_lp(problem):
    """Render `problem` in CPLEX LP text format."""
    A = problem.matrix().tocsr()
    names = problem.var_names

    lines = [f"\\ {problem.name}", "Minimize"]
    objective = [(j, c) for j, c in enumerate(problem.costs) if c != 0.0]
    lines.append(f" obj: {_format_terms(objective, names)}")

    lines.append("Subject To")
    for i, (sense, rhs) in enumerate(zip(problem.senses, problem.rhs)):
        start, end = A.indptr[i], A.indptr[i + 1]
        terms = list(zip(A.indices[start:end], A.data[start:end]))
        lines.append(
            f" {problem.row_names[i]}: {_format_terms(terms, names)} {sense} {rhs:.12g}"
        )

    lines.append("Bounds")
    for j, (lo, up) in enumerate(zip(problem.lower, problem.upper)):
        if not np.isfinite(lo) and not np.isfinite(up):
            lines.append(f" {names[j]} free")
        else:
            lo_txt = f"{lo:.12g}" if np.isfinite(lo) else "-inf"
            up_txt = f"{up:.12g}" if np.isfinite(up) else "+inf"
            lines.append(f" {lo_txt} <= {names[j]} <= {up_txt}")

    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(problem, path):
    write_something(path, lambda f: f.write(format_lp(problem)))
