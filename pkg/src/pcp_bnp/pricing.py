"""Pricing: find independent sets with negative reduced cost.

With the RMP duals `pi`, `lam` and `mu`, placing the independent set `S` on
pile `c` has reduced cost

    rc(S, c) = -(sum_{v in S} pi_v e_v + sum_{n : S ∩ P_n ≠ ∅} lam_n
                 + sum_{e touching S} mu_{e,c}).

The vertex weight `omega_v = pi_v e_v + lam_{p(v)}` is the improvement a
vertex contributes without conflict duals; on pile `c` the improvement is
`omega_v + sum_{e ∋ v} mu_{e,c}`. Since `S` is independent and holds at most
one vertex per partition, `rc(S, c)` is minus the sum of these improvements.
"""
import heapq
import time
import itertools
import dataclasses
from typing import Dict, List

import numpy as np

from pcp_bnp import logger
from .master import Column
from .qaia import QaiaConfig, QaiaError, SOLVERS
from .qubo import build_qubo, qubo_to_ising, spins_to_binary


RC_EPS = 1e-6


class PricingError(RuntimeError):
    pass


@dataclasses.dataclass
class VertexWeights:
    omega: Dict[int, float]


@dataclasses.dataclass
class PricingResult:
    columns: List[Column]
    best_reduced_cost: float
    backend: str
    wall_time: float
    reduced_costs: List[float] = dataclasses.field(default_factory=list)


def vertex_weights(duals, inst, graph):
    """`omega_v = pi_v e_v + lam_{p(v)}` for every alive vertex of `graph`."""
    return VertexWeights(omega={
        v: duals.pi.get(v, 0.0) * graph.completion(v)
        + duals.lam.get(graph.partition_of(v), 0.0)
        for v in graph.alive_vertices()
    })


def reduced_cost(col, duals, pile):
    """Exact LP reduced cost of placing `col` on `pile`."""
    incident = duals.incident_mu[pile]

    value = 0.0
    for v in col:
        value += duals.pi.get(v, 0.0) * duals.completion.get(v, 0.0)
        value += incident.get(v, 0.0)

    for n in {duals.partition_of[v] for v in col}:
        value += duals.lam.get(n, 0.0)

    return -value


def best_reduced_cost(col, duals):
    """The lowest reduced cost of `col` over all piles."""
    return min(reduced_cost(col, duals, c) for c in range(duals.piles))


def max_weight_independent_set(graph, weights, tol=1e-12):
    """Exact maximum-weight independent set over the positive-weight vertices.

    Best-first branch and bound. Vertices are ordered by decreasing weight,
    the bound adds the heaviest remaining candidate of every partition. Sets
    are Python integers used as bitsets.
    """
    candidates = sorted(
        (v for v in graph.alive_vertices() if weights[v] > tol),
        key=lambda v: (-weights[v], v)
    )
    if not candidates:
        return frozenset(), 0.0

    position = {v: i for i, v in enumerate(candidates)}
    w = [weights[v] for v in candidates]
    part = [graph.partition_of(v) for v in candidates]

    adjacency = [0] * len(candidates)
    for i, v in enumerate(candidates):
        for u in graph.neighbors(v):
            if u in position:
                adjacency[i] |= 1 << position[u]

    def bound(mask):
        seen, total = set(), 0.0
        while mask:
            low = mask & -mask
            i = low.bit_length() - 1
            if part[i] not in seen:
                seen.add(part[i])
                total += w[i]
            mask ^= low
        return total

    best_value, best_mask = 0.0, 0
    chosen = 0
    for i in range(len(candidates)):
        if not adjacency[i] & chosen:
            chosen |= 1 << i
            best_value += w[i]
    best_mask = chosen

    counter = itertools.count()
    full = (1 << len(candidates)) - 1
    heap = [(-bound(full), next(counter), 0.0, 0, full)]

    while heap:
        neg_ub, _, value, chosen, mask = heapq.heappop(heap)
        if -neg_ub <= best_value + tol:
            break

        if mask == 0:
            continue

        low = mask & -mask
        i = low.bit_length() - 1

        included = (value + w[i], chosen | low, mask & ~adjacency[i] & ~low)
        excluded = (value, chosen, mask & ~low)

        for child_value, child_chosen, child_mask in (included, excluded):
            if child_value > best_value + tol:
                best_value, best_mask = child_value, child_chosen

            ub = child_value + bound(child_mask)
            if child_mask and ub > best_value + tol:
                heapq.heappush(
                    heap, (-ub, next(counter), child_value, child_chosen, child_mask)
                )

    selected = frozenset(candidates[i] for i in range(len(candidates))
                         if best_mask >> i & 1)
    return selected, best_value


def _pile_profiles(duals, vertices, piles):
    """Group piles with identical conflict duals on `vertices`."""
    profiles = {}
    for c in range(piles):
        incident = duals.incident_mu[c]
        key = tuple(round(incident.get(v, 0.0), 12) for v in vertices)
        profiles.setdefault(key, []).append(c)

    return list(profiles.values())


def price_exact(duals, graph, inst, piles=None, alpha=0.0, rc_eps=RC_EPS):
    """Exact pricing: one best independent set per distinct pile profile.

    A column is returned if its improvement exceeds `alpha + rc_eps`. With
    `alpha = 0` an empty result proves that no improving column exists.
    """
    start = time.perf_counter()
    weights = vertex_weights(duals, inst, graph)
    vertices = graph.alive_vertices()

    found = {}
    best_rc = 0.0
    for piles_of_profile in _pile_profiles(duals, vertices, piles or duals.piles):
        c = piles_of_profile[0]
        incident = duals.incident_mu[c]
        pile_weights = {v: weights.omega[v] + incident.get(v, 0.0) for v in vertices}

        selected, gain = max_weight_independent_set(graph, pile_weights)
        best_rc = min(best_rc, -gain)
        if not selected or gain - alpha <= rc_eps:
            continue

        col = Column.of(selected)
        rc = best_reduced_cost(col, duals)
        if rc < -rc_eps:
            found[col.key] = (rc, col)

    ranked = sorted(found.values(), key=lambda item: (item[0], item[1].key))
    result = PricingResult(
        columns=[col for _, col in ranked],
        best_reduced_cost=best_rc,
        backend="exact",
        wall_time=time.perf_counter() - start,
        reduced_costs=[rc for rc, _ in ranked],
    )

    logger.debug(
        f"Exact pricing: {len(result.columns)} column(s), best rc {best_rc:.6g}."
    )
    return result


def repair(raw, weights, graph, inst=None, duals=None, rc_eps=RC_EPS):
    """Turn an arbitrary assignment into a column, or `None`.

    `raw` holds one entry per alive vertex and pile, in the variable order of
    the pricing QUBO. A vertex is selected if any of its entries exceeds 1/2.
    Conflicts are resolved greedily by decreasing `omega` (ties to the lower
    id), then every partition keeps its heaviest vertex and vertices with
    `omega <= 0` are dropped. The result is returned only if it improves the
    RMP, using `duals` if given and `omega` otherwise.
    """
    vertices = graph.alive_vertices()
    if not vertices:
        return None

    x = np.asarray(raw, dtype=float).reshape(len(vertices), -1)
    with np.errstate(invalid="ignore"):
        selected = [v for v, row in zip(vertices, x) if np.any(row > 0.5)]

    omega = weights.omega
    kept = []
    for v in sorted(selected, key=lambda v: (-omega[v], v)):
        if not any(graph.has_edge(v, u) for u in kept):
            kept.append(v)

    heaviest = {}
    for v in sorted(kept, key=lambda v: (-omega[v], v)):
        heaviest.setdefault(graph.partition_of(v), v)

    kept = [v for v in heaviest.values() if omega[v] > 0.0]
    if not kept:
        return None

    col = Column.of(kept)
    if duals is not None:
        rc = best_reduced_cost(col, duals)
    else:
        rc = -sum(omega[v] for v in kept)

    return col if rc < -rc_eps else None


def price_qaia(duals, graph, inst, piles, backend, config, call_index=0):
    """Heuristic pricing through the QUBO and a QAIA backend.

    Every restart is decoded twice: the assignment aggregated over piles and
    every single-pile slice of it are repaired into candidate columns. An
    empty result proves nothing; the caller must fall back to `price_exact`.
    """
    if backend not in SOLVERS:
        raise ValueError(f"Unknown QAIA backend '{backend}'.")

    start = time.perf_counter()
    rc_eps = config["pricing.rc_eps"]
    weights = vertex_weights(duals, inst, graph)
    vertices = graph.alive_vertices()
    if not vertices:
        return PricingResult([], 0.0, backend, time.perf_counter() - start)

    q = build_qubo(weights, graph, piles,
                   config["qubo.lambda1"] or None, config["qubo.lambda2"] or None)
    ising = qubo_to_ising(q)

    seed = config["bnp.seed"] * 1_000_003 + config["qaia.seed"] + call_index
    qaia_config = QaiaConfig.from_config(
        config, restarts=config["pricing.restarts"], seed=seed
    )

    try:
        spins = SOLVERS[backend](ising, qaia_config)
    except (QaiaError, FloatingPointError) as e:
        raise PricingError(f"QAIA backend '{backend}' failed: {e}") from e

    found = {}
    for restart_spins in spins.restart_spins:
        x = spins_to_binary(restart_spins).reshape(len(vertices), piles)
        candidates = [x] + [x[:, c] for c in range(piles)]

        for raw in candidates:
            col = repair(raw, weights, graph, inst, duals=duals, rc_eps=rc_eps)
            if col is not None and col.key not in found:
                found[col.key] = (best_reduced_cost(col, duals), col)

    ranked = sorted(found.values(), key=lambda item: (item[0], item[1].key))
    ranked = ranked[:config["pricing.max_cols"]]

    result = PricingResult(
        columns=[col for _, col in ranked],
        best_reduced_cost=ranked[0][0] if ranked else 0.0,
        backend=backend,
        wall_time=time.perf_counter() - start,
        reduced_costs=[rc for rc, _ in ranked],
    )

    logger.debug(
        f"{backend} pricing: {len(result.columns)} column(s),"
        f" best rc {result.best_reduced_cost:.6g}."
    )
    return result
