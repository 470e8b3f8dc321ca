import itertools

import numpy as np
import pytest

from pcp_bnp.config import SolverConfig
from pcp_bnp.qaia import IsingModel, QaiaConfig, SOLVERS
from pcp_bnp.qaia import brute_force_ground, coupling_scale, energy, to_spins
from pcp_bnp.qaia import solve_bsb, solve_simcim


def spin_glass(seed, n=12):
    rng = np.random.default_rng(seed)
    J = np.triu(rng.integers(-1, 2, size=(n, n)).astype(float), 1)
    return IsingModel(J=J + J.T, h=np.zeros(n))


def test_model_validation():
    with pytest.raises(ValueError):
        IsingModel(J=np.zeros((2, 3)), h=np.zeros(2))
    with pytest.raises(ValueError):
        IsingModel(J=np.array([[0.0, 1.0], [0.0, 0.0]]), h=np.zeros(2))
    with pytest.raises(ValueError):
        IsingModel(J=np.eye(2), h=np.zeros(2))


def test_energy():
    model = IsingModel(J=np.zeros((3, 3)), h=np.ones(3), offset=0.5)
    assert energy(model, np.ones(3, dtype=int)) == pytest.approx(3.5)

    with pytest.raises(ValueError):
        model.energy([1, 1])
    with pytest.raises(ValueError):
        model.energy([1, 0, 1])


def test_energy_matches_double_loop():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3))
    J = A + A.T
    np.fill_diagonal(J, 0.0)
    h = rng.normal(size=3)
    model = IsingModel(J=J, h=h, offset=0.25)

    for s in itertools.product([-1, 1], repeat=3):
        expected = 0.25 + sum(h[i] * s[i] for i in range(3))
        expected += 0.5 * sum(J[i, j] * s[i] * s[j]
                              for i in range(3) for j in range(3))
        assert model.energy(np.array(s)) == pytest.approx(expected)


def test_single_flip_delta():
    model = spin_glass(3, n=6)
    s = np.array([1, -1, 1, 1, -1, -1])
    for i in range(6):
        t = s.copy()
        t[i] = -t[i]
        delta = -2 * s[i] * (model.J[i] @ s + model.h[i])
        assert model.energy(t) - model.energy(s) == pytest.approx(delta)


def test_batched_energies():
    model = spin_glass(4, n=5)
    spins = np.array(list(itertools.product([-1, 1], repeat=5)))
    expected = [model.energy(s) for s in spins]
    assert model.energies(spins) == pytest.approx(expected)


def test_to_spins():
    assert list(to_spins(np.array([-0.2, 0.0, 0.3]))) == [-1, 1, 1]


def test_brute_force_ground():
    result = brute_force_ground(IsingModel(J=np.zeros((1, 1)), h=[5.0]))
    assert list(result.best_spins) == [-1]
    assert result.best_energy == pytest.approx(-5.0)

    antiferro = IsingModel(J=np.array([[0.0, 1.0], [1.0, 0.0]]), h=np.zeros(2))
    result = brute_force_ground(antiferro)
    assert list(result.best_spins) == [-1, 1]
    assert result.best_energy == pytest.approx(-1.0)


def test_brute_force_refuses_large_models():
    with pytest.raises(ValueError):
        brute_force_ground(IsingModel(J=np.zeros((21, 21)), h=np.zeros(21)))


def test_config_validation():
    with pytest.raises(ValueError):
        QaiaConfig(steps=0)
    with pytest.raises(ValueError):
        QaiaConfig(restarts=0)
    with pytest.raises(ValueError):
        QaiaConfig(dt=0.0)


def test_config_from_solver_config():
    config = SolverConfig({"qaia.steps": 50, "qaia.dt": 0.0, "qaia.xi": 0.3})
    cfg = QaiaConfig.from_config(config, restarts=4, seed=9)

    assert cfg.steps == 50
    assert cfg.dt is None
    assert cfg.xi == 0.3
    assert cfg.restarts == 4
    assert cfg.seed == 9


def test_coupling_scale():
    cfg = QaiaConfig()
    assert coupling_scale(IsingModel(J=np.zeros((2, 2)), h=np.ones(2)), cfg) == 0.1

    equal = IsingModel(J=np.array([[0.0, 2.0], [2.0, 0.0]]), h=np.zeros(2))
    assert coupling_scale(equal, cfg) == 0.1

    # nonzero couplings 1, 3, 1, 3 have std 1
    J = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    model = IsingModel(J=J, h=np.zeros(3))
    assert coupling_scale(model, cfg) == pytest.approx(0.5 / np.sqrt(3))
    assert coupling_scale(model, QaiaConfig(xi=0.7)) == 0.7


def test_coupling_scale_ignores_the_mean():
    J = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    shifted = np.where(J != 0.0, J + 10.0, 0.0)

    cfg = QaiaConfig()
    assert coupling_scale(IsingModel(J=shifted, h=np.zeros(3)), cfg) == pytest.approx(
        coupling_scale(IsingModel(J=J, h=np.zeros(3)), cfg)
    )


@pytest.mark.parametrize("solver", [solve_bsb, solve_simcim])
def test_field_alignment(solver):
    model = IsingModel(J=np.zeros((1, 1)), h=[-2.0])
    result = solver(model, QaiaConfig(steps=200, restarts=4))

    assert list(result.best_spins) == [1]
    assert result.best_energy == pytest.approx(-2.0)


@pytest.mark.parametrize("solver", [solve_bsb, solve_simcim])
def test_two_spin_ground_states(solver):
    antiferro = IsingModel(J=np.array([[0.0, 1.0], [1.0, 0.0]]), h=np.zeros(2))
    ferro = IsingModel(J=np.array([[0.0, -1.0], [-1.0, 0.0]]), h=np.zeros(2))

    cfg = QaiaConfig(steps=300, restarts=8)
    a = solver(antiferro, cfg)
    assert a.best_spins[0] != a.best_spins[1]
    assert a.best_energy == pytest.approx(-1.0)

    f = solver(ferro, cfg)
    assert f.best_spins[0] == f.best_spins[1]
    assert f.best_energy == pytest.approx(-1.0)


def test_simcim_zero_model():
    model = IsingModel(J=np.zeros((4, 4)), h=np.zeros(4), offset=1.5)
    result = solve_simcim(model, QaiaConfig(steps=20, restarts=2))
    assert result.best_energy == pytest.approx(1.5)


@pytest.mark.parametrize("backend", sorted(SOLVERS))
def test_result_invariants(backend):
    model = spin_glass(7, n=10)
    cfg = QaiaConfig(steps=200, restarts=6, seed=3)
    result = SOLVERS[backend](model, cfg)

    assert result.restart_spins.shape == (6, 10)
    assert set(np.unique(result.restart_spins)) <= {-1, 1}
    assert result.best_energy == model.energy(result.best_spins)
    assert result.best_energy == pytest.approx(result.energies.min())
    assert result.best_energy >= brute_force_ground(model).best_energy - 1e-9


@pytest.mark.parametrize("backend", sorted(SOLVERS))
def test_determinism(backend):
    model = spin_glass(8, n=8)
    cfg = QaiaConfig(steps=100, restarts=4, seed=11)

    first = SOLVERS[backend](model, cfg)
    second = SOLVERS[backend](model, cfg)
    assert np.array_equal(first.restart_spins, second.restart_spins)
    assert np.array_equal(first.energies, second.energies)


def test_bsb_positions_stay_within_walls():
    model = spin_glass(9, n=8)
    for steps in (1, 5, 50):
        result = solve_bsb(model, QaiaConfig(steps=steps, restarts=3, dt=0.9))
        assert np.all(np.isfinite(result.energies))
        assert result.final_state.shape == (3, 8)
        assert np.all(np.abs(result.final_state) <= 1.0)


def test_simcim_amplitudes_are_clamped():
    model = spin_glass(9, n=8)
    result = solve_simcim(model, QaiaConfig(steps=50, restarts=3, dt=0.9, noise=0.5))
    assert np.all(np.abs(result.final_state) <= 1.0)


@pytest.mark.long
@pytest.mark.parametrize("backend, steps, rate", [("bsb", 1000, 0.90),
                                                  ("simcim", 2000, 0.85)])
def test_spin_glass_hit_rate(backend, steps, rate):
    hits = 0
    for seed in range(50):
        model = spin_glass(seed)
        ground = brute_force_ground(model).best_energy
        result = SOLVERS[backend](model, QaiaConfig(steps=steps, restarts=32, seed=seed))
        hits += result.best_energy <= ground + 1e-9

    assert hits >= rate * 50
