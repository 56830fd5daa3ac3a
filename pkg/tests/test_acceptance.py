"""Acceptance criteria 1-11. Each test prints one ``[PASS]``/``[FAIL]`` line.

Run alone with ``pytest -v -s tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``;
the lines are also repeated in the pytest terminal summary.
"""

import itertools
import math
import sys
import time

import numpy as np
from scipy.optimize import minimize

from _util import matching_pennies, random_instance, random_mixture
from electguard.disjoint import FtplConfig, ftpl_solve, iterations_for_epsilon
from electguard.experiments import ExperimentConfig, run_budget_sweep, run_gap_table, run_uncertainty_suite
from electguard.model import (
    Marginals,
    MixedStrategy,
    adversarial_extend,
    blocked_influence,
    defender_survival,
    exposure,
    monte_carlo_payoff,
    multilinear_extension,
    multilinear_gradient,
    payoff,
    substitute_marginals,
)
from electguard.nondisjoint import MirrorConfig, greedy_best_response, online_gradient_solve
from electguard.oracles import (
    check_submodular_monotone,
    exact_attacker_best_response,
    exact_defender_best_response,
    finite_difference_gradient,
    matrix_game_value,
)
from electguard.projections import project_entropic, project_euclidean

RESULTS: dict[str, str] = {}


def report(cid, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] C{cid}: {detail}"
    RESULTS[cid] = line
    print(line)
    assert ok, line


def subsets(m, k):
    return [c for r in range(k + 1) for c in itertools.combinations(range(m), r)]


def test_c01_gap_table():
    t0 = time.time()
    cfg = ExperimentConfig(m=30, n=150, iterations=50, step_size=0.05, budget_expansion=1.0,
                           k_a_values=(3, 5), k_d_values=(3, 5), replications=10, master_seed=0)
    res = run_gap_table(cfg)
    cells = [(r["k_d"], r["k_a"], r["mean_gap"], r["std_gap"]) for r in res.summary]
    ok = all(not r["skipped"] and r["undefined"] == 0 and r["mean_gap"] <= 0.10 for r in res.summary)
    text = ", ".join(f"(k_d={d},k_a={a}) {mu:.3f}±{sd:.3f}" for d, a, mu, sd in cells)
    report(1, ok, f"mean certified gap per cell {text} (threshold 0.10, {time.time() - t0:.0f}s)")


def test_c02_disjoint_equilibrium():
    eps = 0.5
    worst = 0.0
    lines = []
    for seed in range(3):
        inst, th = random_instance(seed, m=6, n=30, k_a=2, k_d=2, disjoint=True)
        T = iterations_for_epsilon(30, 2, 2, eps)
        tr = ftpl_solve(inst, th, FtplConfig(epsilon=eps, iterations=T, seed=seed))
        tau = matrix_game_value(inst, th).value
        value = float(exposure(inst, th, tr.attacker_mixture) @ defender_survival(inst, tr.defender_mixture))
        b_u = exact_attacker_best_response(inst, th, tr.defender_mixture)[1]
        b_l = exact_defender_best_response(inst, th, tr.attacker_mixture)[1]
        dev = max(abs(tr.empirical_value - tau), b_u - value, value - b_l)
        worst = max(worst, dev)
        lines.append(f"tau={tau:.4f} emp={tr.empirical_value:.4f}")
    report(2, worst <= eps, f"T={T}, worst deviation {worst:.4f} <= {eps} ({'; '.join(lines)})")


def test_c03_matching_pennies():
    inst, w = matching_pennies()
    tau = matrix_game_value(inst, w).value
    tr = ftpl_solve(inst, w, FtplConfig(epsilon=0.1, seed=0))
    b_ftpl = exact_attacker_best_response(inst, w, tr.defender_mixture)[1]
    res = online_gradient_solve(inst, w, MirrorConfig(iterations=200))
    b_og = exact_attacker_best_response(inst, w, res.defender_mixture)[1]
    ok = abs(tau - 0.5) <= 1e-6 and b_ftpl <= 0.6 and b_og <= 0.6
    report(3, ok, f"value {tau:.9f}, FTPL b_u {b_ftpl:.4f}, online-gradient b_u {b_og:.4f}")


def test_c04_gradient_oracle():
    rng = np.random.default_rng(4)
    worst = 0.0
    for seed in range(10):
        m = int(rng.integers(5, 21))
        k = int(rng.integers(1, m + 1))
        inst, th = random_instance(seed, m=m, n=40, k_a=k, degree=(1, 5))
        s_d = tuple(sorted(rng.choice(m, size=int(rng.integers(0, 3)), replace=False).tolist()))
        for _ in range(10):
            x = rng.uniform(0.01, 0.99, m)
            x *= min(1.0, 0.95 * k / x.sum())
            x = np.clip(x, 2e-6, 1 - 2e-6)
            g = multilinear_gradient(inst, th, x, s_d)
            fd = finite_difference_gradient(lambda z: multilinear_extension(inst, th, z, s_d), x, h=1e-6)
            scale = np.maximum(np.abs(fd), 1e-12)
            worst = max(worst, float(np.max(np.abs(g - fd) / scale)))
    report(4, worst <= 1e-5, f"max relative error {worst:.2e} over 100 points on 10 instances")


def test_c05_vertex_consistency():
    rng = np.random.default_rng(5)
    worst, checks = 0.0, 0
    for seed in range(100):
        m = int(rng.integers(2, 9))
        inst, th = random_instance(seed, m=m, n=10, k_a=min(3, m), k_d=min(2, m))
        for s_d in subsets(m, min(2, m)):
            for s_a in subsets(m, min(3, m)):
                x = np.zeros(m)
                x[list(s_a)] = 1.0
                worst = max(worst, abs(multilinear_extension(inst, th, x, s_d) - payoff(inst, th, s_d, s_a)))
                checks += 1
    report(5, worst <= 1e-12, f"max |F(1_S|S_d) - f| = {worst:.1e} over {checks} pairs on 100 instances")


def test_c06_submodularity():
    rng = np.random.default_rng(6)
    violations = 0
    for seed in range(20):
        m = int(rng.integers(3, 9))
        inst, th = random_instance(seed, m=m, n=15, k_a=2, k_d=2)
        sigma = random_mixture(rng, m, 2, size=3)
        violations += len(check_submodular_monotone(lambda A: blocked_influence(inst, th, tuple(A), sigma), m))
    report(6, violations == 0, f"{violations} monotonicity/diminishing-returns violations over 20 instances")


def test_c07_greedy_guarantees():
    rng = np.random.default_rng(7)
    lemma_bad = 0
    for seed in range(50):
        m = int(rng.integers(4, 11))
        k_d = int(rng.integers(1, 4))
        inst, th = random_instance(seed, m=m, n=20, k_a=2, k_d=k_d)
        sigma = random_mixture(rng, m, 2)
        s_opt, _ = exact_defender_best_response(inst, th, sigma)
        g_opt = blocked_influence(inst, th, s_opt, sigma)
        for ell in (k_d, 2 * k_d, 3 * k_d):
            s = greedy_best_response(inst, th, sigma, min(ell, m))
            if blocked_influence(inst, th, s, sigma) < (1 - math.exp(-ell / k_d)) * g_opt - 1e-9:
                lemma_bad += 1
    eps = 0.1
    expanded_bad = 0
    for seed in range(50):
        inst, th = random_instance(100 + seed, m=10, n=20, k_a=2, k_d=2)
        sigma = random_mixture(rng, 10, 2)
        budget = math.ceil(math.log(20 / eps) * 2)
        s = greedy_best_response(inst, th, sigma, budget)
        val = float(exposure(inst, th, sigma) @ defender_survival(inst, MixedStrategy.pure(s)))
        if val > exact_defender_best_response(inst, th, sigma)[1] + eps:
            expanded_bad += 1
    ok = lemma_bad == 0 and expanded_bad == 0
    report(7, ok, f"lemma violations {lemma_bad}/150, ln(n/eps)-budget violations {expanded_bad}/50")


def _euclid_oracle(y, k):
    d = y.size
    res = minimize(lambda x: 0.5 * np.sum((x - y) ** 2), np.full(d, min(k / d, 0.5)), jac=lambda x: x - y,
                   bounds=[(0, 1)] * d, constraints=[{"type": "ineq", "fun": lambda x: k - x.sum()}],
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    return res.x


def _kl(x, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(x > 0, x * np.log(x / y), 0.0)
    return float(np.sum(t - x + y))


def test_c08_projections():
    rng = np.random.default_rng(8)
    euc_err = idem = infeas = 0.0
    kl_bad = 0
    for _ in range(200):
        d = int(rng.integers(2, 5))
        k = int(rng.integers(1, d + 1))
        y = rng.uniform(-1, 2.5, d)
        x = project_euclidean(y, k)
        euc_err = max(euc_err, float(np.max(np.abs(x - _euclid_oracle(y, k)))))
        idem = max(idem, float(np.max(np.abs(project_euclidean(x, k) - x))))
        for z in (x, project_entropic(np.abs(y) + 0.01, k), project_entropic(np.abs(y) + 0.01, k, "exact")):
            infeas = max(infeas, float(max(-z.min(), z.max() - 1, z.sum() - k, 0.0)))
    for _ in range(20):
        d = int(rng.integers(2, 6))
        k = int(rng.integers(1, d + 1))
        y = rng.uniform(0.05, 3, d)
        x = project_entropic(y, k, "exact")
        pts = rng.uniform(0, 1, (1000, d))
        over = pts.sum(axis=1) > k
        pts[over] *= (k / pts[over].sum(axis=1))[:, None]
        kl_bad += sum(_kl(x, y) > _kl(p, y) + 1e-12 for p in pts)
    ok = euc_err <= 1e-6 and idem <= 1e-12 and infeas <= 1e-9 and kl_bad == 0
    report(8, ok, f"Euclidean vs oracle {euc_err:.1e}, idempotence {idem:.1e}, infeasibility {infeas:.1e}, "
                  f"KL beaten by {kl_bad} random points")


def test_c09_reductions_and_trends():
    worst = 0.0
    for seed in range(5):
        inst, th = random_instance(seed, m=5, n=8, k_a=2, k_d=2)
        ext = adversarial_extend(inst, th, 0).instance
        w01 = substitute_marginals(inst, Marginals(th))
        for s_d in subsets(5, 2):
            for s_a in subsets(5, 2):
                f = payoff(inst, th, s_d, s_a)
                worst = max(worst, abs(payoff(ext, th, s_d, s_a) - f), abs(payoff(inst, w01, s_d, s_a) - f))
    unc = run_uncertainty_suite(ExperimentConfig(k_a_values=(3,), k_d_values=(3,), radius_values=(0, 2, 4, 8),
                                                 replications=10, samples=20))
    sweep = run_budget_sweep(ExperimentConfig(k_a_values=(1, 3, 5), k_d_values=(0, 1, 3, 5), replications=10))
    ok = worst <= 1e-12 and unc.adversarial_monotone and sweep.nonincreasing_in_kd and sweep.nondecreasing_in_ka
    report(9, ok, f"reduction error {worst:.1e}; l-sweep nondecreasing={unc.adversarial_monotone}; "
                  f"sweep nonincreasing in k_d={sweep.nonincreasing_in_kd}, nondecreasing in k_a={sweep.nondecreasing_in_ka}; "
                  f"stochastic vs known {unc.stochastic_rel_diff:.1%}, asymmetric vs known {unc.asymmetric_rel_diff:.1%}")


def test_c10_monte_carlo():
    rng = np.random.default_rng(10)
    worst = 0.0
    for seed in range(50):
        m = int(rng.integers(2, 8))
        inst, th = random_instance(seed, m=m, n=12, k_a=min(3, m), k_d=min(2, m))
        s_a = tuple(rng.choice(m, size=min(3, m), replace=False).tolist())
        s_d = tuple(rng.choice(m, size=int(rng.integers(0, min(2, m) + 1)), replace=False).tolist())
        mean, se = monte_carlo_payoff(inst, th, s_d, s_a, 10**5, seed=seed)
        exact = payoff(inst, th, s_d, s_a)
        worst = max(worst, abs(mean - exact) / se if se > 0 else (0.0 if mean == exact else math.inf))
    report(10, worst <= 3, f"worst deviation {worst:.2f} standard errors over 50 triples")


def test_c11_determinism(tmp_path):
    small = dict(m=10, n=30, k_a_values=(2,), k_d_values=(0, 2), replications=2, iterations=20, samples=3,
                 radius_values=(0, 2))
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        cfg = ExperimentConfig(**{**small, "k_d_values": (2,)}, output_dir=str(out))
        run_gap_table(cfg)
        run_uncertainty_suite(cfg)
        run_budget_sweep(ExperimentConfig(**small, output_dir=str(out)))
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = outputs[0] == outputs[1] and len(outputs[0]) == 4
    report(11, same, f"{len(outputs[0])} output files byte-identical across re-runs with master seed 0")


def pytest_terminal_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))
