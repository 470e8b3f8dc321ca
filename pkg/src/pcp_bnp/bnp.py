"""Branch-and-price over the node tree.

Nodes are explored best-first by their LP bound, ties in creation order.
Every node owns a copy of the conflict graph carrying its branching
decisions: removed vertices, extra edges and contractions. Columns live in
the ids of the graph they were priced on and are remapped when handed to a
child.
"""
import math
import heapq
import itertools
import dataclasses
from typing import Dict, List, Optional, Tuple

from pcp_bnp import logger
from .config import SolverConfig
from .graph import build_conflict_graph, color_selection
from .instance import makespan
from .lp import INFEASIBLE, OPTIMAL, write_lp
from .master import (Column, MasterError, INTEGRALITY_TOL, build_rmp, extract_duals,
                     fractional_report, initial_columns)
from .pricing import PricingError, price_exact, price_qaia
from .util import Deadline, Stopwatch


BOUND_TOL = 1e-6

OPEN = "open"
FATHOMED_BOUND = "fathomed-bound"
FATHOMED_INFEASIBLE = "fathomed-infeasible"
BRANCHED = "branched"
INTEGRAL = "integral"

STATUS_OPTIMAL = "optimal"
STATUS_TIME_LIMIT = "time-limit"
STATUS_INFEASIBLE = "infeasible"


class BranchingError(RuntimeError):
    """An integral node decodes to a selection the instance doesn't allow."""


@dataclasses.dataclass
class NodeState:
    node_id: int
    parent: Optional[int]
    graph: object
    pool: List[Column] = dataclasses.field(default_factory=list)
    fixed: set = dataclasses.field(default_factory=set)
    forbidden: set = dataclasses.field(default_factory=set)
    extra_edges: List[Tuple[int, int]] = dataclasses.field(default_factory=list)
    merges: List[Tuple[int, int, int]] = dataclasses.field(default_factory=list)
    lp_bound: float = 0.0
    status: str = OPEN
    depth: int = 0

    @property
    def partitions(self):
        return self.graph.partitions()


@dataclasses.dataclass
class Incumbent:
    selection: Tuple[int, ...]
    makespan: int
    pile_assignment: Dict[int, int]
    found_at_node: int = -1
    found_at_time: float = 0.0


@dataclasses.dataclass
class SolveStats:
    obj: Optional[int] = None
    gap_percent: float = 100.0
    t_total: float = 0.0
    t_rmp: float = 0.0
    t_pricing: float = 0.0
    n_pricing_calls: int = 0
    n_pricing_exact: int = 0
    n_pricing_heuristic: int = 0
    n_columns: int = 0
    n_nodes: int = 0
    lower_bound: float = 0.0
    status: str = STATUS_OPTIMAL


@dataclasses.dataclass
class ColumnGenerationResult:
    lp_value: Optional[float]
    duals: object
    solution: object
    model: object
    converged: bool

    @property
    def infeasible(self):
        return self.lp_value is None


class SearchTracker:
    """Clocks and counters shared by all nodes of one solve."""

    def __init__(self, time_limit):
        self.deadline = Deadline(time_limit)
        self.rmp = Stopwatch()
        self.pricing = Stopwatch()
        self.n_exact = 0
        self.n_heuristic = 0
        self.n_columns = 0
        self.n_nodes = 0
        self._calls = itertools.count()

    def next_call_index(self):
        return next(self._calls)


def _rounded_bound(bound):
    return math.ceil(bound - BOUND_TOL)


def _can_fathom(bound, incumbent):
    return incumbent is not None and _rounded_bound(bound) >= incumbent.makespan


def _price(node, inst, duals, config, tracker):
    """One pricing round: the heuristic backend first, exact as fallback."""
    backend = config["pricing.backend"]
    rc_eps = config["pricing.rc_eps"]

    if backend != "exact":
        tracker.n_heuristic += 1
        try:
            result = price_qaia(duals, node.graph, inst, inst.piles, backend, config,
                                call_index=tracker.next_call_index())
        except PricingError as e:
            logger.warning(f"{e} Falling back to exact pricing.")
        else:
            if result.columns:
                return result.columns

    alpha = config["pricing.alpha"]
    tracker.n_exact += 1
    result = price_exact(duals, node.graph, inst, alpha=alpha, rc_eps=rc_eps)

    if not result.columns and alpha > 0.0:
        tracker.n_exact += 1
        result = price_exact(duals, node.graph, inst, alpha=0.0, rc_eps=rc_eps)

    return result.columns


def column_generation(node, inst, config, tracker=None, dump_lp=None):
    """Solve the node LP to optimality over all columns.

    Alternates between the RMP and pricing until exact pricing finds no
    improving column. If the time limit interrupts the loop, the result is
    marked as not converged and its value is no bound.
    """
    config = config if config is not None else SolverConfig()
    tracker = tracker if tracker is not None else SearchTracker(config["bnp.time_limit"])

    try:
        model = build_rmp(node.graph, inst, node.pool, config)
    except MasterError as e:
        logger.debug(f"Node {node.node_id}: {e}")
        return ColumnGenerationResult(None, None, None, None, converged=True)

    if dump_lp is not None:
        write_lp(model.lp, dump_lp)
        logger.info(f"Wrote the root RMP to '{dump_lp}'.")

    solved_once = False
    while True:
        with tracker.rmp.running():
            sol = model.solve()

        if not solved_once:
            tracker.n_nodes += 1
            solved_once = True

        if sol.status == INFEASIBLE:
            return ColumnGenerationResult(None, None, sol, model, converged=True)

        assert sol.status == OPTIMAL, sol.status
        duals = extract_duals(sol, model)

        if tracker.deadline.expired():
            return ColumnGenerationResult(sol.objective, duals, sol, model,
                                          converged=False)

        with tracker.pricing.running():
            columns = _price(node, inst, duals, config, tracker)

        if not columns:
            break

        added = sum(model.add_column(col) for col in columns)
        tracker.n_columns += added
        if added == 0:
            logger.warning(
                f"Node {node.node_id}: pricing only returned pooled columns,"
                " stopping column generation."
            )
            break

    node.pool = list(model.columns)
    return ColumnGenerationResult(sol.objective, duals, sol, model, converged=True)


def _inherit_pool(pool, graph):
    """Remap `pool` into `graph`, keeping what is still a valid column."""
    kept = {}
    for col in pool:
        mapped = {graph.resolve(v) for v in col}
        if not all(graph.alive(v) for v in mapped):
            continue

        partitions = [graph.partition_of(v) for v in mapped]
        if len(set(partitions)) != len(partitions):
            continue

        if graph.is_independent(mapped):
            child_col = Column.of(mapped)
            kept[child_col.key] = child_col

    for col in initial_columns(graph):
        kept.setdefault(col.key, col)

    return list(kept.values())


class _ChildFactory:
    def __init__(self):
        self._ids = itertools.count(1)

    def make(self, parent, mutate):
        """A child of `parent` after `mutate(child)`; `None` if stillborn."""
        child = NodeState(
            node_id=next(self._ids),
            parent=parent.node_id,
            graph=parent.graph.copy(),
            fixed=set(parent.fixed),
            forbidden=set(parent.forbidden),
            extra_edges=list(parent.extra_edges),
            merges=list(parent.merges),
            lp_bound=parent.lp_bound,
            depth=parent.depth + 1,
        )

        if not mutate(child):
            child.status = FATHOMED_INFEASIBLE
            return child

        child.pool = _inherit_pool(parent.pool, child.graph)
        return child


def _forbid(child, vertices):
    """Remove `vertices`; `False` if a partition runs out of vertices."""
    graph = child.graph
    emptied = False
    for v in vertices:
        p = graph.partition_of(v)
        graph.remove_vertex(v)
        child.forbidden.add(v)
        emptied = emptied or p not in graph.partitions()

    return not emptied


def _select_children(node, v, factory):
    siblings = [u for u in node.graph.partitions()[node.graph.partition_of(v)] if u != v]

    def select(child):
        child.fixed.add(v)
        return _forbid(child, siblings)

    def discard(child):
        return _forbid(child, [v])

    return factory.make(node, select), factory.make(node, discard)


def branch_rule1(node, report, factory=None):
    """Select/discard branching on a vertex of a partition split in the LP.

    Returns `None` if every partition has at most one vertex of positive mass.
    """
    factory = factory if factory is not None else _ChildFactory()

    best = None
    for p, members in node.graph.partitions().items():
        positive = [v for v in members
                    if report.vertex_mass.get(v, 0.0) > INTEGRALITY_TOL]
        if len(positive) >= 2 and (best is None or len(positive) > len(best[1])):
            best = (p, positive)

    if best is None:
        return None

    p, positive = best
    v = min(positive, key=lambda u: (-round(report.vertex_mass[u], 9), u))
    logger.debug(f"Node {node.node_id}: rule 1 on vertex {v} of partition {p}.")
    return _select_children(node, v, factory)


def branch_rule2(node, report, factory=None):
    """Different/same pile branching on a fractionally co-occurring pair.

    Returns `None` if no cross-partition pair has mass strictly inside (0, 1).
    """
    factory = factory if factory is not None else _ChildFactory()
    graph = node.graph

    candidates = [
        (-round(mass, 9), u, v) for (u, v), mass in report.pair_mass.items()
        if graph.partition_of(u) != graph.partition_of(v)
        and INTEGRALITY_TOL < mass < 1.0 - INTEGRALITY_TOL
    ]
    if not candidates:
        return None

    _, u, v = min(candidates)
    logger.debug(f"Node {node.node_id}: rule 2 on pair ({u}, {v}).")

    def different(child):
        child.graph.add_edge(u, v)
        child.extra_edges.append((u, v))
        return True

    def same(child):
        partitions = child.graph.partitions()
        siblings = [
            w for p in {graph.partition_of(u), graph.partition_of(v)}
            for w in partitions[p] if w not in (u, v)
        ]
        _forbid(child, siblings)

        z = child.graph.contract(u, v)
        child.merges.append((u, v, z))
        child.fixed = {child.graph.resolve(w) for w in child.fixed} | {z}
        child.extra_edges = [
            (a, b) for a, b in child.extra_edges
            if child.graph.alive(a) and child.graph.alive(b)
        ]
        return True

    return factory.make(node, different), factory.make(node, same)


def forced_selection(node, report):
    """The vertex of unit mass per partition, or `None` if one is missing."""
    selection = {}
    for p, members in node.graph.partitions().items():
        forced = [v for v in members
                  if report.vertex_mass.get(v, 0.0) >= 1.0 - INTEGRALITY_TOL]
        if len(forced) != 1:
            return None
        selection[p] = forced[0]

    return selection


def branch_selection(node, report, factory=None):
    """Select/discard on the forced vertex of the first partition that has a choice.

    Returns `None` if every partition is down to a single vertex.
    """
    factory = factory if factory is not None else _ChildFactory()
    selection = forced_selection(node, report)
    if selection is None:
        return None

    for p, members in node.graph.partitions().items():
        if len(members) >= 2:
            logger.debug(f"Node {node.node_id}: selection branching on {selection[p]}.")
            return _select_children(node, selection[p], factory)

    return None


def decode_incumbent(graph, inst, pile_of):
    """Expand node vertices to original vertices and verify the schedule.

    Raises `BranchingError` unless every vehicle gets exactly one interval and
    no two intervals on a pile overlap.
    """
    assignment = {}
    for v, c in pile_of.items():
        for member in graph.members(v):
            assignment[member] = c

    selection = tuple(sorted(assignment))
    vehicles = [inst.partition_of(v) for v in selection]
    if sorted(vehicles) != list(range(inst.num_vehicles)):
        raise BranchingError(
            f"Selection {selection} doesn't pick one interval per vehicle."
        )

    if any(c < 0 or c >= inst.piles for c in assignment.values()):
        raise BranchingError(f"Pile assignment {assignment} uses unknown piles.")

    original = build_conflict_graph(inst)
    for c in set(assignment.values()):
        on_pile = [v for v in selection if assignment[v] == c]
        if not original.is_independent(on_pile):
            raise BranchingError(f"Pile {c} holds conflicting intervals {on_pile}.")

    return Incumbent(
        selection=selection,
        makespan=int(makespan(inst, selection)),
        pile_assignment=assignment,
    )


def check_integral(report, node, inst, piles, incumbent=None):
    """Decode an integral RMP solution into an improving incumbent.

    Returns `None` if the solution is fractional or doesn't improve on
    `incumbent`.
    """
    if not report.is_integral:
        return None

    pile_of = {}
    for col, c, value in report.assignments:
        if value > 0.5:
            assert 0 <= c < piles
            for v in col:
                pile_of[v] = c

    found = decode_incumbent(node.graph, inst, pile_of)
    if incumbent is not None and found.makespan >= incumbent.makespan:
        return None

    return found


def gap_and_stats(open_bounds, incumbent, tracker, status):
    """Final statistics; `open_bounds` are the bounds of unexplored nodes."""
    stats = SolveStats(
        obj=incumbent.makespan if incumbent is not None else None,
        t_total=tracker.deadline.elapsed,
        t_rmp=tracker.rmp.elapsed,
        t_pricing=tracker.pricing.elapsed,
        n_pricing_calls=tracker.n_exact + tracker.n_heuristic,
        n_pricing_exact=tracker.n_exact,
        n_pricing_heuristic=tracker.n_heuristic,
        n_columns=tracker.n_columns,
        n_nodes=tracker.n_nodes,
        status=status,
    )

    if incumbent is None:
        stats.gap_percent = 100.0
        stats.lower_bound = min(open_bounds, default=0.0)
    elif status == STATUS_OPTIMAL:
        stats.gap_percent = 0.0
        stats.lower_bound = float(incumbent.makespan)
    else:
        lower = min(
            [_rounded_bound(b) for b in open_bounds] + [incumbent.makespan]
        )
        gap = 100.0 * (incumbent.makespan - lower) / incumbent.makespan
        stats.gap_percent = min(100.0, max(0.0, gap))
        stats.lower_bound = float(lower)

    return stats


class BranchAndPrice:
    def __init__(self, inst, config=None, dump_lp=None):
        self.inst = inst
        self.config = config if config is not None else SolverConfig()
        self.dump_lp = dump_lp

        self.tracker = SearchTracker(self.config["bnp.time_limit"])
        self.factory = _ChildFactory()
        self.incumbent = None

        self._order = itertools.count()
        self._open = []

    def _push(self, node):
        heapq.heappush(self._open, (node.lp_bound, next(self._order), node))

    def _update_incumbent(self, found, node):
        if found is None:
            return
        if self.incumbent is not None and found.makespan >= self.incumbent.makespan:
            return

        found.found_at_node = node.node_id
        found.found_at_time = self.tracker.deadline.elapsed
        self.incumbent = found
        logger.info(
            f"New incumbent with makespan {found.makespan} at node {node.node_id}."
        )

        assert _rounded_bound(node.lp_bound) <= found.makespan

    def _process(self, node):
        """Solve and close or branch `node`; `False` if the time ran out."""
        dump_lp = self.dump_lp if node.node_id == 0 else None
        result = column_generation(node, self.inst, self.config, self.tracker,
                                   dump_lp=dump_lp)

        if result.infeasible:
            node.status = FATHOMED_INFEASIBLE
            return True

        if not result.converged:
            self._push(node)
            return False

        node.lp_bound = max(node.lp_bound, result.lp_value)
        if _can_fathom(node.lp_bound, self.incumbent):
            node.status = FATHOMED_BOUND
            return True

        report = fractional_report(result.solution, result.model)
        if report.is_integral:
            node.status = INTEGRAL
            self._update_incumbent(
                check_integral(report, node, self.inst, self.inst.piles, self.incumbent),
                node,
            )
            return True

        children = branch_rule1(node, report, self.factory)
        if children is None:
            selection = forced_selection(node, report)
            assert selection is not None

            coloring = color_selection(node.graph, selection.values(), self.inst.piles)
            if coloring is not None:
                node.status = INTEGRAL
                self._update_incumbent(
                    decode_incumbent(node.graph, self.inst, coloring), node
                )
                return True

            children = branch_rule2(node, report, self.factory)
            if children is None:
                children = branch_selection(node, report, self.factory)

        if children is None:
            node.status = FATHOMED_INFEASIBLE
            return True

        node.status = BRANCHED
        for child in children:
            if child.status == OPEN:
                self._push(child)

        return True

    def run(self):
        graph = build_conflict_graph(self.inst)
        root = NodeState(node_id=0, parent=None, graph=graph,
                         pool=initial_columns(graph))
        self._push(root)

        status = STATUS_OPTIMAL
        while self._open:
            if self.tracker.deadline.expired():
                status = STATUS_TIME_LIMIT
                break

            bound, _, node = heapq.heappop(self._open)
            if _can_fathom(bound, self.incumbent):
                node.status = FATHOMED_BOUND
                continue

            if not self._process(node):
                status = STATUS_TIME_LIMIT
                break

        if status == STATUS_OPTIMAL and self.incumbent is None:
            status = STATUS_INFEASIBLE

        open_bounds = [bound for bound, _, _ in self._open]
        stats = gap_and_stats(open_bounds, self.incumbent, self.tracker, status)

        logger.info(
            f"Finished with status {stats.status}: obj {stats.obj},"
            f" gap {stats.gap_percent:.2f}%, {stats.n_nodes} node(s),"
            f" {stats.n_pricing_calls} pricing call(s), {stats.t_total:.3f} s."
        )
        return self.incumbent, stats


def solve(inst, config=None, dump_lp=None):
    """Minimize the makespan of `inst`; returns `(incumbent, stats)`.

    The incumbent is `None` if the search ended without a feasible schedule,
    either because none exists or because the time limit was hit first.
    """
    return BranchAndPrice(inst, config, dump_lp=dump_lp).run()
