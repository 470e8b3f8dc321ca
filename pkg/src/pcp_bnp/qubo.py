"""QUBO form of the pricing problem.

Binary `x[v, c]` places vertex `v` on pile `c`. The energy

    H = -sum_{v,c} w_v x[v,c]
        + lambda1 * sum_n (sum_{v in P_n, c} x[v,c] - 1)^2
        + lambda2 * sum_{(u,v) in E} sum_c x[u,c] x[v,c]

is stored as `x^T Q x + l^T x + const` with a symmetric, zero-diagonal `Q`.
"""
import dataclasses
from typing import List, Tuple

import numpy as np

from .qaia import IsingModel


@dataclasses.dataclass
class QuboModel:
    Q: np.ndarray
    linear: np.ndarray
    constant: float
    variables: List[Tuple[int, int]]
    lambda1: float
    lambda2: float

    @property
    def n(self):
        return self.linear.shape[0]

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x + self.linear @ x + self.constant)


def auto_penalties(weights, graph, piles):
    """Penalties large enough that every global minimizer is conflict-free.

    `lambda2` must beat `lambda1` plus any single weight, otherwise keeping a
    conflict can be cheaper than emptying a partition.
    """
    omega = [weights.omega[v] for v in graph.alive_vertices()]
    largest = max((abs(w) for w in omega), default=0.0)
    lambda1 = 2.0 * (largest * min(len(omega), 2 * piles) + 1.0)
    return lambda1, 2.0 * lambda1


def build_qubo(weights, graph, piles, lambda1=None, lambda2=None):
    """Assemble the pricing QUBO; `None` penalties are chosen automatically."""
    auto1, auto2 = auto_penalties(weights, graph, piles)
    lambda1 = auto1 if lambda1 is None else lambda1
    lambda2 = auto2 if lambda2 is None else lambda2

    if not (lambda1 > 0.0 and lambda2 > 0.0):
        raise ValueError(f"Penalties must be positive, got {lambda1}, {lambda2}.")

    vertices = graph.alive_vertices()
    variables = [(v, c) for v in vertices for c in range(piles)]
    index = {var: k for k, var in enumerate(variables)}

    n = len(variables)
    Q = np.zeros((n, n))
    linear = np.zeros(n)
    constant = 0.0

    for (v, c), k in index.items():
        linear[k] -= weights.omega[v]

    for members in graph.partitions().values():
        block = [index[v, c] for v in members for c in range(piles)]
        constant += lambda1
        for i, a in enumerate(block):
            linear[a] -= lambda1
            for b in block[i + 1:]:
                Q[a, b] += lambda1
                Q[b, a] += lambda1

    for u, v in graph.edges():
        for c in range(piles):
            a, b = index[u, c], index[v, c]
            Q[a, b] += 0.5 * lambda2
            Q[b, a] += 0.5 * lambda2

    return QuboModel(Q=Q, linear=linear, constant=constant, variables=variables,
                     lambda1=float(lambda1), lambda2=float(lambda2))


def qubo_to_ising(q):
    """Substitute `x = (1 + s) / 2`; energies agree on every assignment."""
    Q = np.array(q.Q, dtype=float)
    linear = np.array(q.linear, dtype=float) + np.diag(Q)
    np.fill_diagonal(Q, 0.0)
    Q = 0.5 * (Q + Q.T)

    J = 0.5 * Q
    h = 0.5 * Q.sum(axis=1) + 0.5 * linear
    offset = 0.25 * Q.sum() + 0.5 * linear.sum() + q.constant

    return IsingModel(J=J, h=h, offset=offset)


def spins_to_binary(spins):
    return (np.asarray(spins) > 0).astype(np.int8)
