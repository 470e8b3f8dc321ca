"""Brute-force references for small instances.

These enumerate the solution space outright and are meant for validation
of the branch-and-price solver, not for solving.
"""
import itertools

from .instance import makespan, max_overlap


def pile_feasible(inst, selection, piles=None):
    """Whether `selection` fits on the piles, by counting overlaps."""
    piles = inst.piles if piles is None else piles
    return max_overlap(inst, selection) <= piles


def brute_force_makespan(inst):
    """Optimal `(makespan, selection)` over all one-per-vehicle selections.

    Returns `None` if no selection fits on the piles.
    """
    best = None
    for selection in itertools.product(*inst.partitions):
        if not pile_feasible(inst, selection):
            continue

        value = makespan(inst, selection)
        if best is None or value < best[0]:
            best = (value, tuple(sorted(selection)))

    return best


def _set_partitions(items, max_blocks):
    if not items:
        yield []
        return

    first, rest = items[0], items[1:]
    for blocks in _set_partitions(rest, max_blocks):
        for k in range(len(blocks)):
            yield blocks[:k] + [[first] + blocks[k]] + blocks[k + 1:]
        if len(blocks) < max_blocks:
            yield [[first]] + blocks


def feasible_colorings(graph, piles):
    """All integral solutions of a node graph, in terms of original vertices.

    A solution picks one alive vertex per partition and splits the picks into
    at most `piles` independent sets. It is returned as a frozenset of piles,
    each pile the frozenset of original vertices it serves.
    """
    solutions = set()
    groups = list(graph.partitions().values())

    for selection in itertools.product(*groups):
        for blocks in _set_partitions(list(selection), piles):
            if all(graph.is_independent(block) for block in blocks):
                solutions.add(frozenset(
                    frozenset(m for v in block for m in graph.members(v))
                    for block in blocks
                ))

    return solutions
