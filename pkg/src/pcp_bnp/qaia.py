"""Quantum-annealing-inspired Ising heuristics.

Both solvers minimize

    H(s) = 1/2 s^T J s + h^T s + offset,    s in {-1, +1}^n,

and run all restarts as one batch, row `r` of the state matrices being
restart `r`. Restart `r` draws its random numbers from
`np.random.default_rng(seed + r)`, hence results don't depend on how many
restarts run together.
"""
import time
import dataclasses
from typing import Optional

import numpy as np

from pcp_bnp import logger


MAX_BRUTE_FORCE_SPINS = 20


class QaiaError(RuntimeError):
    pass


@dataclasses.dataclass
class IsingModel:
    J: np.ndarray
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        self.offset = float(self.offset)

        n = self.h.shape[0]
        if self.J.shape != (n, n):
            raise ValueError(f"J has shape {self.J.shape}, expected {(n, n)}.")
        if not np.allclose(self.J, self.J.T, rtol=0.0, atol=1e-12):
            raise ValueError("J must be symmetric.")
        if np.any(np.diag(self.J) != 0.0):
            raise ValueError("J must have a zero diagonal.")

    @property
    def n(self):
        return self.h.shape[0]

    def energy(self, spins):
        spins = np.asarray(spins)
        if spins.shape != (self.n,):
            raise ValueError(f"Expected {self.n} spins, got shape {spins.shape}.")
        if not np.all((spins == 1) | (spins == -1)):
            raise ValueError("Spins must be -1 or +1.")

        s = spins.astype(float)
        return float(0.5 * s @ self.J @ s + self.h @ s + self.offset)

    def energies(self, spins):
        """Energies of a batch of spin vectors, one per row."""
        s = np.asarray(spins, dtype=float)
        return 0.5 * np.einsum("ri,ri->r", s @ self.J, s) + s @ self.h + self.offset


def energy(model, spins):
    return model.energy(spins)


@dataclasses.dataclass
class QaiaConfig:
    steps: int = 1000
    dt: Optional[float] = None
    restarts: int = 32
    seed: int = 0
    pump_start: float = -1.0
    pump_end: float = 1.0
    noise: float = 0.01
    xi: Optional[float] = None
    a0: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"Need steps >= 1, got {self.steps}.")
        if self.restarts < 1:
            raise ValueError(f"Need restarts >= 1, got {self.restarts}.")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError(f"Need dt > 0, got {self.dt}.")

    @classmethod
    def from_config(cls, config, restarts=None, seed=None):
        """Build from a `SolverConfig`; zero `dt` and `xi` mean automatic."""
        return cls(
            steps=config["qaia.steps"],
            dt=config["qaia.dt"] or None,
            restarts=restarts if restarts is not None else config["qaia.restarts"],
            seed=seed if seed is not None else config["qaia.seed"],
            pump_start=config["qaia.pump_start"],
            pump_end=config["qaia.pump_end"],
            noise=config["qaia.noise"],
            xi=config["qaia.xi"] or None,
            a0=config["qaia.a0"],
        )


@dataclasses.dataclass
class SpinResult:
    best_spins: np.ndarray
    best_energy: float
    energies: np.ndarray
    restart_spins: np.ndarray
    wall_time: float
    failed_restarts: int = 0
    # positions (bSB) or amplitudes (SimCIM) after the last step
    final_state: Optional[np.ndarray] = None


def coupling_scale(model, cfg):
    """The coupling scale `xi`, `0.5 / (sqrt(n) * std)` of the nonzero couplings.

    Falls back to 0.1 if there are no couplings or all of them are equal.
    """
    if cfg.xi is not None:
        return cfg.xi

    couplings = model.J[model.J != 0.0]
    if couplings.size == 0:
        return 0.1

    std = np.std(couplings)
    if std <= 1e-12 * np.max(np.abs(couplings)):
        return 0.1

    return 0.5 / (np.sqrt(model.n) * std)


def to_spins(x):
    """Sign with `sign(0) = +1`."""
    return np.where(x >= 0.0, 1, -1).astype(np.int8)


def _restart_generators(cfg):
    return [np.random.default_rng(cfg.seed + r) for r in range(cfg.restarts)]


def _collect(model, state, start):
    finite = np.all(np.isfinite(state), axis=1)
    if not np.any(finite):
        raise QaiaError("All restarts diverged.")

    if not np.all(finite):
        logger.warning(f"{np.count_nonzero(~finite)} QAIA restart(s) diverged.")

    spins = to_spins(np.where(np.isfinite(state), state, 0.0))
    energies = np.where(finite, model.energies(spins), np.inf)

    best = int(np.argmin(energies))
    best_spins = spins[best].copy()

    return SpinResult(
        best_spins=best_spins,
        best_energy=model.energy(best_spins),
        energies=energies,
        restart_spins=spins,
        wall_time=time.perf_counter() - start,
        failed_restarts=int(np.count_nonzero(~finite)),
        final_state=state.copy(),
    )


def solve_bsb(model, cfg):
    """Ballistic simulated bifurcation with inelastic walls at +-1."""
    start = time.perf_counter()
    dt = cfg.dt if cfg.dt is not None else 0.25
    xi = coupling_scale(model, cfg)
    a0 = cfg.a0

    rngs = _restart_generators(cfg)
    initial = [(rng.uniform(-0.1, 0.1, model.n), rng.uniform(-0.1, 0.1, model.n))
               for rng in rngs]
    x = np.array([xy[0] for xy in initial]).reshape(cfg.restarts, model.n)
    y = np.array([xy[1] for xy in initial]).reshape(cfg.restarts, model.n)

    J, h = model.J, model.h
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.steps + 1):
            a = a0 * t / cfg.steps
            y += dt * (-(a0 - a) * x + xi * (-(x @ J) - h))
            x += dt * a0 * y

            wall = np.abs(x) > 1.0
            x[wall] = np.sign(x[wall])
            y[wall] = 0.0

    return _collect(model, x, start)


def solve_simcim(model, cfg):
    """Simulated coherent Ising machine with a linear pump and clamped amplitudes."""
    start = time.perf_counter()
    dt = cfg.dt if cfg.dt is not None else 0.05
    xi = coupling_scale(model, cfg)

    rngs = _restart_generators(cfg)
    c = np.zeros((cfg.restarts, model.n))

    J, h = model.J, model.h
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.steps + 1):
            p = cfg.pump_start + (cfg.pump_end - cfg.pump_start) * t / cfg.steps
            noise = np.array([rng.standard_normal(model.n) for rng in rngs])
            noise = noise.reshape(cfg.restarts, model.n)

            c += dt * (p * c + xi * (-(c @ J) - h)) + cfg.noise * noise
            np.clip(c, -1.0, 1.0, out=c)

    return _collect(model, c, start)


SOLVERS = {
    "bsb": solve_bsb,
    "simcim": solve_simcim,
}


def brute_force_ground(model):
    """Exhaustive ground state; ties go to the lexicographically first vector.

    Spin vectors are enumerated in lexicographic order with `-1 < +1`.
    """
    n = model.n
    if n > MAX_BRUTE_FORCE_SPINS:
        raise ValueError(f"Refusing to enumerate 2^{n} spin vectors.")

    start = time.perf_counter()
    shifts = np.arange(n - 1, -1, -1)
    chunk = 1 << 14

    best_energy, best_spins = np.inf, None
    for low in range(0, 1 << n, chunk):
        index = np.arange(low, min(low + chunk, 1 << n))
        spins = (2 * ((index[:, None] >> shifts) & 1) - 1).astype(np.int8)
        energies = model.energies(spins)

        chunk_min = energies.min()
        if chunk_min < best_energy - 1e-9:
            k = int(np.flatnonzero(energies <= chunk_min + 1e-9)[0])
            best_energy, best_spins = chunk_min, spins[k].copy()

    return SpinResult(
        best_spins=best_spins,
        best_energy=model.energy(best_spins),
        energies=np.array([best_energy]),
        restart_spins=best_spins[None, :],
        wall_time=time.perf_counter() - start,
    )
