"""The restricted master problem (RMP) over a pool of independent sets.

For columns `S` and piles `c` the LP relaxation reads

    min  tau
    s.t. sum_{S ∋ v} sum_c e_v zeta_{S,c} - tau <= 0    for every vertex v
         sum_{S ∩ P_n ≠ ∅} sum_c zeta_{S,c}   = 1       for every partition n
         sum_{S ∋ u or S ∋ v} zeta_{S,c}      <= 1      for every edge (u,v), pile c
         zeta >= 0, tau >= 0.

The rows are referred to as time rows, cover rows and conflict rows.
"""
import functools
import dataclasses
import collections
from typing import Dict, FrozenSet, Tuple

import numpy as np

from pcp_bnp import logger
from .lp import LpProblem, solve_lp, kkt_residuals, LE, EQ


INTEGRALITY_TOL = 1e-6
KKT_TOL = 1e-6


class ColumnError(ValueError):
    """A column is not an independent set with one vertex per partition."""


class MasterError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class Column:
    """An independent set, identified by its sorted vertex tuple `key`."""
    key: Tuple[int, ...]

    @classmethod
    def of(cls, vertices):
        return cls(tuple(sorted(set(int(v) for v in vertices))))

    @property
    def vertices(self) -> FrozenSet[int]:
        return frozenset(self.key)

    def __len__(self):
        return len(self.key)

    def __iter__(self):
        return iter(self.key)


@dataclasses.dataclass
class DualPrices:
    """Row duals of the RMP in the usual signs of a minimization.

    `pi` belongs to the time rows (`<= 0`), `lam` to the cover rows (free) and
    `mu[(u, v), c]` to the conflict rows (`<= 0`). Missing conflict rows have
    zero dual.
    """
    pi: Dict[int, float]
    lam: Dict[int, float]
    mu: Dict[Tuple[Tuple[int, int], int], float]
    piles: int
    completion: Dict[int, float] = dataclasses.field(default_factory=dict)
    partition_of: Dict[int, int] = dataclasses.field(default_factory=dict)

    @functools.cached_property
    def incident_mu(self):
        """Per pile, `v -> sum of mu over conflict rows incident to v`."""
        incident = [collections.defaultdict(float) for _ in range(self.piles)]
        for ((u, v), c), value in self.mu.items():
            if value != 0.0:
                incident[c][u] += value
                incident[c][v] += value

        return incident


@dataclasses.dataclass
class FractionalReport:
    vertex_mass: Dict[int, float]
    pair_mass: Dict[Tuple[int, int], float]
    column_mass: Dict[Tuple[int, ...], float]
    assignments: list
    is_integral: bool


def _check_column(graph, col):
    if len(col) == 0:
        raise ColumnError("Empty column.")

    for v in col:
        if not graph.alive(v):
            raise ColumnError(f"Column {col.key} uses removed vertex {v}.")

    partitions = [graph.partition_of(v) for v in col]
    if len(set(partitions)) != len(partitions):
        raise ColumnError(f"Column {col.key} has two vertices of one partition.")

    if not graph.is_independent(col.key):
        raise ColumnError(f"Column {col.key} is not an independent set.")


class RmpModel:
    def __init__(self, graph, piles, lazy_row_threshold=50000, refactor_interval=100,
                 check=False):
        self.graph = graph
        self.piles = piles
        self.refactor_interval = refactor_interval
        self.check = check

        self.columns = []
        self.zeta = []
        self._keys = {}
        self._vertex_columns = collections.defaultdict(list)

        self.lp = LpProblem("rmp")
        self.tau = self.lp.add_variable(cost=1.0, lower=0.0, name="tau")

        self.vertex_rows = {
            v: self.lp.add_row(LE, [(self.tau, -1.0)], 0.0, name=f"time_{v}")
            for v in graph.alive_vertices()
        }
        self.partition_rows = {
            p: self.lp.add_row(EQ, [], 1.0, name=f"cover_{p}")
            for p in graph.partitions()
        }

        self.edges = graph.edges()
        self.lazy = len(self.edges) * piles > lazy_row_threshold
        self.conflict_rows = {}
        if not self.lazy:
            for c in range(piles):
                for edge in self.edges:
                    self._add_conflict_row(edge, c)
        else:
            logger.debug(
                f"RMP with {len(self.edges) * piles} conflict rows, using row generation."
            )

        self.warm_start = None
        self.solution = None

    def _add_conflict_row(self, edge, c):
        u, v = edge
        touching = set(self._vertex_columns[u]) | set(self._vertex_columns[v])
        entries = [(self.zeta[k][c], 1.0) for k in sorted(touching)]

        row = self.lp.add_row(LE, entries, 1.0, name=f"conflict_{u}_{v}_{c}")
        self.conflict_rows[edge, c] = row
        return row

    def has_column(self, col):
        return col.key in self._keys

    def add_column(self, col):
        """Add `col` with one variable per pile; `False` if already pooled."""
        _check_column(self.graph, col)

        if col.key in self._keys:
            return False

        k = len(self.columns)
        shared = [(self.vertex_rows[v], float(self.graph.completion(v))) for v in col]
        shared += [(self.partition_rows[self.graph.partition_of(v)], 1.0) for v in col]

        incident = sorted({
            (min(v, w), max(v, w)) for v in col for w in self.graph.neighbors(v)
        })

        variables = []
        for c in range(self.piles):
            entries = list(shared)
            for edge in incident:
                row = self.conflict_rows.get((edge, c))
                if row is not None:
                    entries.append((row, 1.0))

            variables.append(
                self.lp.add_variable(cost=0.0, lower=0.0, name=f"zeta_{k}_{c}",
                                     entries=entries)
            )

        self.columns.append(col)
        self.zeta.append(variables)
        self._keys[col.key] = k
        for v in col:
            self._vertex_columns[v].append(k)

        return True

    def separate_conflict_rows(self, x):
        """Add violated conflict rows; returns how many were added."""
        added = 0
        for c in range(self.piles):
            load = collections.defaultdict(float)
            for k, col in enumerate(self.columns):
                value = x[self.zeta[k][c]]
                if value > 0.0:
                    for v in col:
                        load[v] += value

            for edge in self.edges:
                if (edge, c) in self.conflict_rows:
                    continue
                if load[edge[0]] + load[edge[1]] > 1.0 + INTEGRALITY_TOL:
                    self._add_conflict_row(edge, c)
                    added += 1

        return added

    def solve(self):
        """Solve the RMP, warm started from the previous basis."""
        while True:
            sol = solve_lp(self.lp, self.warm_start,
                           refactor_interval=self.refactor_interval)
            sol.raise_for_status()

            if not sol.is_optimal:
                break

            self.warm_start = sol.basis
            if not self.lazy or self.separate_conflict_rows(sol.x) == 0:
                break

        if self.check and sol.is_optimal:
            residuals = kkt_residuals(self.lp, sol)
            assert all(r <= KKT_TOL for r in residuals.values()), residuals

        self.solution = sol
        return sol

    def zeta_values(self, sol):
        """Array of shape `(len(columns), piles)` with the values of zeta."""
        if not self.columns:
            return np.zeros((0, self.piles))

        return sol.x[np.array(self.zeta)]


def initial_columns(graph, inst=None):
    """One singleton column per alive vertex."""
    return [Column.of([v]) for v in graph.alive_vertices()]


def build_rmp(graph, inst, pool, config=None):
    """Build the RMP over `pool` for the node graph `graph`.

    Every alive partition must be covered by a column, otherwise the cover
    rows can't be satisfied and `MasterError` is raised.
    """
    if config is not None:
        options = dict(
            lazy_row_threshold=config["master.lazy_row_threshold"],
            refactor_interval=config["lp.refactor_interval"],
            check=config["lp.check"],
        )
    else:
        options = {}

    model = RmpModel(graph, inst.piles, **options)
    for col in pool:
        model.add_column(col)

    covered = {graph.partition_of(v) for col in model.columns for v in col}
    missing = set(model.partition_rows) - covered
    if missing:
        raise MasterError(f"Column pool does not cover partitions {sorted(missing)}.")

    return model


def extract_duals(sol, model):
    if not sol.is_optimal:
        raise ValueError(f"Duals need an optimal RMP, got status '{sol.status}'.")

    y = sol.duals
    return DualPrices(
        pi={v: float(y[row]) for v, row in model.vertex_rows.items()},
        lam={p: float(y[row]) for p, row in model.partition_rows.items()},
        mu={key: float(y[row]) for key, row in model.conflict_rows.items()},
        piles=model.piles,
        completion={v: float(model.graph.completion(v)) for v in model.vertex_rows},
        partition_of={v: model.graph.partition_of(v) for v in model.vertex_rows},
    )


def fractional_report(sol, model):
    """Vertex, pair and column masses of an RMP solution."""
    values = model.zeta_values(sol)

    vertex_mass = {v: 0.0 for v in model.vertex_rows}
    pair_mass = collections.defaultdict(float)
    column_mass = {}
    assignments = []

    for k, col in enumerate(model.columns):
        mass = float(values[k].sum())
        if mass <= INTEGRALITY_TOL:
            continue

        column_mass[col.key] = mass
        for c in range(model.piles):
            if values[k, c] > INTEGRALITY_TOL:
                assignments.append((col, c, float(values[k, c])))

        for i, u in enumerate(col.key):
            vertex_mass[u] += mass
            for v in col.key[i + 1:]:
                pair_mass[u, v] += mass

    is_integral = bool(np.all(
        np.minimum(np.abs(values), np.abs(values - 1.0)) <= INTEGRALITY_TOL
    ))

    return FractionalReport(
        vertex_mass=vertex_mass,
        pair_mass=dict(pair_mass),
        column_mass=column_mass,
        assignments=assignments,
        is_integral=is_integral,
    )
