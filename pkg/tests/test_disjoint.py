import math

import numpy as np
import pytest
from scipy.optimize import linprog

from _util import matching_pennies, random_instance
from electguard.disjoint import FtplConfig, ftpl_adversarial, ftpl_asymmetric, ftpl_solve, iterations_for_epsilon
from electguard.errors import DomainError, StructureError
from electguard.model import GameInstance, adversarial_extend, defender_survival, exposure
from electguard.oracles import (
    exact_attacker_best_response,
    exact_defender_best_response,
    matrix_game_value,
    payoff_matrix,
)


def test_iterations_examples():
    assert iterations_for_epsilon(30, 2, 2, 0.5) == 28800
    for eps in (0.3, 0.7, 1.1):
        a, b = iterations_for_epsilon(20, 3, 2, eps), iterations_for_epsilon(20, 3, 2, 2 * eps)
        assert abs(a / b - 4) <= 4 / b
    assert iterations_for_epsilon(10, 2, 2, 1.0, flip_budget=3) == 4 * 100 * 5
    with pytest.raises(DomainError):
        iterations_for_epsilon(10, 2, 2, 0.0)


def test_config_validation():
    with pytest.raises(DomainError):
        FtplConfig(epsilon=0)
    assert FtplConfig(epsilon=0.25).scale == 4.0
    assert FtplConfig(epsilon=0.25, perturbation_scale=2.0).scale == 2.0


def test_rejects_nondisjoint():
    inst = GameInstance.from_edges(2, 1, [(0, 0, 0.5, 0.5), (1, 0, 0.5, 0.5)], 1, 1)
    with pytest.raises(StructureError):
        ftpl_solve(inst, [1], FtplConfig(epsilon=1.0, iterations=5))
    with pytest.raises(StructureError):
        ftpl_adversarial(inst, [1], 1, FtplConfig(epsilon=1.0, iterations=5))


def test_dominant_channel():
    edges = [(0, v, 0.9, 0.1) for v in range(5)] + [(1, 5, 0.2, 0.1), (2, 6, 0.1, 0.1)]
    inst = GameInstance.from_edges(3, 7, edges, 1, 1)
    tr = ftpl_solve(inst, np.ones(7), FtplConfig(epsilon=0.5, iterations=400, seed=0))
    assert all(0 in s for s in tr.attacker_history[200:])


def test_matching_pennies_value():
    inst, w = matching_pennies()
    tr = ftpl_solve(inst, w, FtplConfig(epsilon=0.1, seed=0))
    assert abs(tr.empirical_value - 0.5) <= 0.1
    assert exact_attacker_best_response(inst, w, tr.defender_mixture)[1] <= 0.6


def test_epsilon_equilibrium_small():
    eps = 0.5
    for seed in range(3):
        inst, th = random_instance(seed, m=5, n=10, k_a=2, k_d=2, disjoint=True)
        tr = ftpl_solve(inst, th, FtplConfig(epsilon=eps, seed=seed))
        tau = matrix_game_value(inst, th).value
        assert abs(tr.empirical_value - tau) <= eps
        b_u = exact_attacker_best_response(inst, th, tr.defender_mixture)[1]
        b_l = exact_defender_best_response(inst, th, tr.attacker_mixture)[1]
        assert b_u - payoff_vs_mixed_avg(inst, th, tr) <= eps
        assert payoff_vs_mixed_avg(inst, th, tr) - b_l <= eps


def payoff_vs_mixed_avg(inst, th, tr):
    return float(exposure(inst, th, tr.attacker_mixture) @ defender_survival(inst, tr.defender_mixture))


def test_trace_feasible_and_seeded():
    inst, th = random_instance(4, m=6, n=12, k_a=2, k_d=3, disjoint=True)
    cfg = FtplConfig(epsilon=1.0, iterations=300, seed=5)
    tr = ftpl_solve(inst, th, cfg)
    assert len(tr.attacker_history) == len(tr.defender_history) == 300
    assert all(len(s) == 2 for s in tr.attacker_history) and all(len(s) == 3 for s in tr.defender_history)
    tr2 = ftpl_solve(inst, th, cfg)
    assert tr.attacker_history == tr2.attacker_history and tr.defender_history == tr2.defender_history
    np.testing.assert_array_equal(tr.payoffs, tr2.payoffs)


def test_defender_regret_bound():
    inst, th = random_instance(6, m=6, n=20, k_a=2, k_d=2, disjoint=True)
    T = 2000
    tr = ftpl_solve(inst, th, FtplConfig(epsilon=0.5, iterations=T, seed=1))
    best_fixed = np.sort(tr.defender_cumulative)[::-1][:2].sum()
    assert tr.defender_realized >= best_fixed - 20 * math.sqrt(2 * T)


# --- asymmetric ---------------------------------------------------------------------------


def test_asymmetric_single_sample_bitwise():
    inst, th = random_instance(7, m=6, n=12, disjoint=True)
    cfg = FtplConfig(epsilon=0.5, iterations=500, seed=3)
    a = ftpl_solve(inst, th, cfg)
    b = ftpl_asymmetric(inst, th[None, :], cfg)
    assert a.attacker_history == b.attacker_history and a.defender_history == b.defender_history
    np.testing.assert_array_equal(a.defender_cumulative, b.defender_cumulative)


def test_asymmetric_identical_samples_same_game():
    inst, th = random_instance(8, m=5, n=10, disjoint=True)
    eps = 0.5
    tr = ftpl_asymmetric(inst, np.tile(th, (4, 1)), FtplConfig(epsilon=eps, seed=0))
    tau = matrix_game_value(inst, th).value
    assert abs(tr.empirical_value - tau) <= eps
    assert exact_attacker_best_response(inst, th, tr.defender_mixture)[1] <= tau + eps


def problem1_value(inst, samples):
    """min over defender mixtures of the sample-average attacker best response (LP over pure defenses)."""
    mats = [payoff_matrix(inst, s)[0] for s in samples]
    r, N = mats[0].shape[0], len(mats)
    cols = sum(A.shape[1] for A in mats)
    A_ub = np.zeros((cols, r + N))
    row = 0
    for j, A in enumerate(mats):
        A_ub[row : row + A.shape[1], :r] = A.T
        A_ub[row : row + A.shape[1], r + j] = -1.0
        row += A.shape[1]
    res = linprog(
        np.r_[np.zeros(r), np.full(N, 1.0 / N)],
        A_ub=A_ub,
        b_ub=np.zeros(cols),
        A_eq=np.r_[np.ones(r), np.zeros(N)][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * (r + N),
        method="highs",
    )
    return res.fun


def test_asymmetric_problem1_objective():
    rng = np.random.default_rng(0)
    inst, _ = random_instance(9, m=5, n=10, k_a=2, k_d=2, disjoint=True)
    samples = (rng.random((10, 10)) < 0.5).astype(float)
    eps = 0.5
    tr = ftpl_asymmetric(inst, samples, FtplConfig(epsilon=eps, seed=1))
    objective = np.mean([exact_attacker_best_response(inst, s, tr.defender_mixture)[1] for s in samples])
    assert objective <= problem1_value(inst, samples) + eps
    assert len(tr.sample_attacker_histories) == 10


# --- adversarial ---------------------------------------------------------------------------


def test_adversarial_radius_zero():
    inst, th = random_instance(10, m=5, n=10, disjoint=True)
    eps = 0.5
    tr = ftpl_adversarial(inst, th, 0, FtplConfig(epsilon=eps, seed=0))
    assert all(max(s) < 5 for s in tr.attacker_history)
    assert abs(tr.empirical_value - matrix_game_value(inst, th).value) <= eps


def test_adversarial_feasible_partition():
    inst, th = random_instance(11, m=5, n=10, k_a=2, disjoint=True)
    tr = ftpl_adversarial(inst, th, 3, FtplConfig(epsilon=1.0, iterations=200, seed=0))
    for s in tr.attacker_history:
        assert sum(u < 5 for u in s) == 2 and sum(u >= 5 for u in s) == 3


def test_adversarial_full_radius_zero_theta():
    inst, _ = random_instance(12, m=4, n=6, k_a=1, k_d=1, disjoint=True)
    zero = np.zeros(6)
    cfg = FtplConfig(epsilon=1.0, iterations=1000, seed=0)
    base = ftpl_adversarial(inst, zero, 0, cfg).empirical_value
    full = ftpl_adversarial(inst, zero, 6, cfg).empirical_value
    assert full >= base


def test_adversarial_sweep_nondecreasing():
    inst, th = random_instance(13, m=4, n=5, k_a=1, k_d=1, disjoint=True)
    eps = 1.0
    taus, emp = [], []
    for radius in range(4):
        ext = adversarial_extend(inst, th, radius).instance
        taus.append(matrix_game_value(ext, th).value)
        tr = ftpl_adversarial(inst, th, radius, FtplConfig(epsilon=eps, iterations=3000, seed=radius))
        emp.append(tr.empirical_value)
    assert all(b >= a - 1e-9 for a, b in zip(taus, taus[1:]))
    assert all(abs(e - t) <= eps for e, t in zip(emp, taus))
