"""Seeded experiment runners: optimality-gap tables, budget sweeps and uncertainty comparisons.

Outputs are comma-separated tables preceded by a ``#``-prefixed JSON
metadata line. Per-replication seeds come from
``numpy.random.SeedSequence(master_seed).spawn(R)`` so a rerun with the same
master seed reproduces every file byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ResourceError
from .generate import generate_instance
from .model import MixedStrategy
from .nondisjoint import MirrorConfig, MirrorResult, og_adversarial, og_asymmetric, online_gradient_solve
from .oracles import (
    DEFAULT_CAP,
    GapCertificate,
    exact_attacker_best_response,
    exact_defender_best_response,
)

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    m: int = 30
    n: int = 150
    degree: tuple[int, int] = (1, 5)
    p_range: tuple[float, float] = (0.0, 0.2)
    q_range: tuple[float, float] = (0.0, 0.2)
    theta_prob: float = 0.5
    iterations: int = 50
    step_size: float = 0.05
    update_rule: str = "euclidean"
    budget_expansion: float = 1.0
    init: str = "paper"
    k_a_values: tuple[int, ...] = (3, 5)
    k_d_values: tuple[int, ...] = (3, 5)
    radius_values: tuple[int, ...] = (0, 2, 4, 8)
    samples: int = 20
    replications: int = 10
    master_seed: int = 0
    cap: int = DEFAULT_CAP
    output_dir: str | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.k_a_values or not self.k_d_values or not self.radius_values:
            raise ConfigError("sweep lists must be nonempty")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if any(k < 1 or k > self.m for k in self.k_a_values):
            raise ConfigError("attacker budgets must lie in [1, m]")
        if any(k < 0 or k > self.m for k in self.k_d_values):
            raise ConfigError("defender budgets must lie in [0, m]")
        if any(r < 0 or r > self.n for r in self.radius_values):
            raise ConfigError("radii must lie in [0, n]")

    def mirror(self) -> MirrorConfig:
        return MirrorConfig(
            iterations=self.iterations,
            step_size=self.step_size,
            update_rule=self.update_rule,
            budget_expansion=self.budget_expansion,
            init=self.init,
        )

    def params(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        return d


def replication_seeds(master_seed: int, replications: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(replications)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _instance(cfg: ExperimentConfig, k_a: int, k_d: int, seed: int):
    return generate_instance(
        cfg.m,
        cfg.n,
        k_a,
        max(k_d, 1),
        degree=cfg.degree,
        p_range=cfg.p_range,
        q_range=cfg.q_range,
        theta_prob=cfg.theta_prob,
        seed=seed,
    )


def certify_mirror(inst, weights, result: MirrorResult, cap: int = DEFAULT_CAP) -> GapCertificate:
    """Gap certificate for an online-gradient run.

    ``b_u`` is the exact attacker best response to the averaged defense.
    ``b_l`` is the larger of the exact defender best-response values against
    the averaged attacker marginals and against the final marginal iterate;
    each is a valid lower bound on the game value, so their maximum is too.
    """
    s_a, b_u = exact_attacker_best_response(inst, weights, result.defender_mixture, cap)
    s_avg, b_avg = exact_defender_best_response(inst, weights, result.attacker_marginals, cap=cap)
    s_fin, b_fin = exact_defender_best_response(inst, weights, result.final_marginals[0], cap=cap)
    s_d, b_l = (s_fin, b_fin) if b_fin > b_avg else (s_avg, b_avg)
    if b_l > 0:
        return GapCertificate(b_u, b_l, (b_u - b_l) / b_l, True, s_a, s_d)
    return GapCertificate(b_u, b_l, math.nan, False, s_a, s_d)


def format_table(meta: dict, header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _emit(cfg: ExperimentConfig, name: str, text: str) -> None:
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _tuples_meta(cfg: ExperimentConfig, kind: str) -> dict:
    meta = {"experiment": kind}
    meta.update(_json_safe(cfg.params()))
    return meta


def _json_safe(d: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass
class TableResult:
    summary: list[dict]
    detail: list[dict]
    text: str = field(repr=False, default="")
    detail_text: str = field(repr=False, default="")


def run_gap_table(cfg: ExperimentConfig) -> TableResult:
    """Mean and standard deviation of the certified gap for each ``(k_d, k_a)`` cell."""
    seeds = replication_seeds(cfg.master_seed, cfg.replications)
    base = {"m": cfg.m, "n": cfg.n, "T": cfg.iterations, "eta": cfg.step_size, "alpha": cfg.budget_expansion,
            "rule": cfg.update_rule, "init": cfg.init, "master_seed": cfg.master_seed}
    summary, detail = [], []
    for k_d in cfg.k_d_values:
        for k_a in cfg.k_a_values:
            gaps, undefined, skipped = [], 0, False
            for rep, seed in enumerate(seeds):
                inst, prefs = _instance(cfg, k_a, k_d, seed)
                try:
                    res = online_gradient_solve(inst, prefs.theta, cfg.mirror())
                    cert = certify_mirror(inst, prefs.theta, res, cfg.cap)
                except ResourceError as exc:
                    log.warning("cell k_d=%d k_a=%d skipped: %s", k_d, k_a, exc)
                    skipped = True
                    break
                detail.append({**base, "k_d": k_d, "k_a": k_a, "rep": rep, "seed": seed,
                               "b_u": cert.b_upper, "b_l": cert.b_lower,
                               "gap": cert.gap if cert.defined else "undefined"})
                if cert.defined:
                    gaps.append(cert.gap)
                else:
                    undefined += 1
            g = np.asarray(gaps)
            summary.append({**base, "k_d": k_d, "k_a": k_a, "R": cfg.replications,
                            "mean_gap": float(g.mean()) if g.size and not skipped else "nan",
                            "std_gap": float(g.std()) if g.size and not skipped else "nan",
                            "undefined": undefined, "skipped": skipped})
            log.info("gap table cell k_d=%d k_a=%d: %s", k_d, k_a, summary[-1]["mean_gap"])
    meta = _tuples_meta(cfg, "gap_table")
    text = format_table(meta, list(summary[0]), summary)
    detail_text = format_table(meta, list(detail[0]) if detail else ["k_d"], detail)
    _emit(cfg, "gap_table.csv", text)
    _emit(cfg, "gap_table_detail.csv", detail_text)
    return TableResult(summary, detail, text, detail_text)


@dataclass
class SweepResult:
    rows: list[dict]
    nonincreasing_in_kd: bool
    nondecreasing_in_ka: bool
    text: str = field(repr=False, default="")


def run_budget_sweep(cfg: ExperimentConfig, tol: float = 1e-9) -> SweepResult:
    """Certified attacker value ``b_u`` over the ``(k_a, k_d)`` grid; ``k_d = 0`` means no defense."""
    seeds = replication_seeds(cfg.master_seed, cfg.replications)
    rows = []
    ok_kd = ok_ka = True
    k_as, k_ds = sorted(cfg.k_a_values), sorted(cfg.k_d_values)
    for rep, seed in enumerate(seeds):
        grid = np.empty((len(k_as), len(k_ds)))
        for i, k_a in enumerate(k_as):
            for j, k_d in enumerate(k_ds):
                inst, prefs = _instance(cfg, k_a, k_d, seed)
                if k_d == 0:
                    _, b_u = exact_attacker_best_response(inst, prefs.theta, MixedStrategy.pure(()), cfg.cap)
                else:
                    res = online_gradient_solve(inst, prefs.theta, cfg.mirror())
                    _, b_u = exact_attacker_best_response(inst, prefs.theta, res.defender_mixture, cfg.cap)
                grid[i, j] = b_u
                rows.append({"m": cfg.m, "n": cfg.n, "T": cfg.iterations, "eta": cfg.step_size,
                             "master_seed": cfg.master_seed, "rep": rep, "seed": seed,
                             "k_a": k_a, "k_d": k_d, "b_u": float(b_u)})
        ok_kd &= bool(np.all(np.diff(grid, axis=1) <= tol))
        ok_ka &= bool(np.all(np.diff(grid, axis=0) >= -tol))
    meta = _tuples_meta(cfg, "budget_sweep")
    meta.update(nonincreasing_in_kd=ok_kd, nondecreasing_in_ka=ok_ka)
    text = format_table(meta, list(rows[0]), rows)
    _emit(cfg, "budget_sweep.csv", text)
    return SweepResult(rows, ok_kd, ok_ka, text)


@dataclass
class UncertaintyResult:
    rows: list[dict]
    adversarial_monotone: bool
    stochastic_rel_diff: float
    asymmetric_rel_diff: float
    text: str = field(repr=False, default="")


def run_uncertainty_suite(cfg: ExperimentConfig, tol: float = 1e-9) -> UncertaintyResult:
    """Robust attacker value under known, stochastic, asymmetric and adversarial preferences.

    Uses the first entries of ``k_a_values`` / ``k_d_values``. The asymmetric
    value is the sample-average of exact per-sample attacker best responses,
    evaluated on an independent draw of ``samples`` preference vectors.
    """
    seeds = replication_seeds(cfg.master_seed, cfg.replications)
    k_a, k_d = cfg.k_a_values[0], max(cfg.k_d_values[0], 1)
    mc = cfg.mirror()
    rows = []
    known_vals, stoch_vals, asym_vals = [], [], []
    monotone = True
    for rep, seed in enumerate(seeds):
        inst, prefs = _instance(cfg, k_a, k_d, seed)
        theta = prefs.theta
        base = {"m": cfg.m, "n": cfg.n, "T": cfg.iterations, "eta": cfg.step_size, "k_a": k_a, "k_d": k_d,
                "master_seed": cfg.master_seed, "rep": rep, "seed": seed}

        res = online_gradient_solve(inst, theta, mc)
        _, v_known = exact_attacker_best_response(inst, theta, res.defender_mixture, cfg.cap)
        rows.append({**base, "setting": "known", "radius": 0, "value": v_known})

        marg = np.full(inst.num_voters, cfg.theta_prob)
        res = online_gradient_solve(inst, marg, mc)
        _, v_stoch = exact_attacker_best_response(inst, marg, res.defender_mixture, cfg.cap)
        rows.append({**base, "setting": "stochastic", "radius": 0, "value": v_stoch})

        rng = np.random.default_rng(seed)
        train = (rng.random((cfg.samples, inst.num_voters)) < cfg.theta_prob).astype(float)
        evals = (rng.random((cfg.samples, inst.num_voters)) < cfg.theta_prob).astype(float)
        res = og_asymmetric(inst, train, mc)
        sigma = res.defender_mixture
        v_asym = float(np.mean([exact_attacker_best_response(inst, th, sigma, cfg.cap)[1] for th in evals]))
        rows.append({**base, "setting": "asymmetric", "radius": 0, "value": v_asym})

        prev = -math.inf
        for radius in sorted(cfg.radius_values):
            res, ext = og_adversarial(inst, theta, radius, mc)
            _, v_adv = exact_attacker_best_response(ext, theta, res.defender_mixture, cfg.cap)
            rows.append({**base, "setting": "adversarial", "radius": radius, "value": v_adv})
            monotone &= v_adv >= prev - tol
            prev = v_adv

        known_vals.append(v_known)
        stoch_vals.append(v_stoch)
        asym_vals.append(v_asym)

    kv = np.mean(known_vals)
    stoch_rel = float(abs(np.mean(stoch_vals) - kv) / kv)
    asym_rel = float(abs(np.mean(asym_vals) - kv) / kv)
    meta = _tuples_meta(cfg, "uncertainty")
    meta.update(adversarial_monotone=bool(monotone), stochastic_rel_diff=stoch_rel, asymmetric_rel_diff=asym_rel)
    text = format_table(meta, list(rows[0]), rows)
    _emit(cfg, "uncertainty.csv", text)
    return UncertaintyResult(rows, bool(monotone), stoch_rel, asym_rel, text)
