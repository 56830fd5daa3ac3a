"""Command-line entry point: ``electguard {gen,solve,gap,table,sweep,uncertainty}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .disjoint import FtplConfig, ftpl_adversarial, ftpl_asymmetric, ftpl_solve
from .errors import ConfigError, DomainError, InvalidStrategyError, ResourceError, StructureError
from .experiments import ExperimentConfig, run_budget_sweep, run_gap_table, run_uncertainty_suite
from .generate import generate_instance
from .model import Adversarial, Known, Marginals, Samples, adversarial_extend, substitute_marginals
from .nondisjoint import EXPERIMENT_STEP, MirrorConfig, og_adversarial, og_asymmetric, online_gradient_solve
from .oracles import DEFAULT_CAP, exact_attacker_best_response, exact_defender_best_response

log = logging.getLogger("electguard")

_ERRORS = (ConfigError, DomainError, InvalidStrategyError, ResourceError, StructureError, OSError, ValueError, KeyError)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="random seed (master seed for experiments)")
    p.add_argument("-o", "--output", help="output file (gen/solve) or directory (experiments); default stdout")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    return p


def _generator_flags(p: argparse.ArgumentParser, experiment: bool) -> None:
    p.add_argument("--m", type=int, default=30, help="number of channels")
    p.add_argument("--n", type=int, default=150, help="number of voters")
    p.add_argument("--degree", type=int, nargs=2, default=(1, 5), metavar=("LO", "HI"), help="channels per voter")
    p.add_argument("--p-range", type=float, nargs=2, default=(0.0, 0.2), metavar=("LO", "HI"))
    p.add_argument("--q-range", type=float, nargs=2, default=(0.0, 0.2), metavar=("LO", "HI"))
    p.add_argument("--theta-prob", type=float, default=0.5, help="P(theta_v = 1)")
    if not experiment:
        p.add_argument("--ka", type=int, default=3, help="attacker budget")
        p.add_argument("--kd", type=int, default=3, help="defender budget")
        p.add_argument("--disjoint", action="store_true", help="one channel per voter")


def _mirror_flags(p: argparse.ArgumentParser, step_default: float) -> None:
    p.add_argument("--iterations", type=int, default=50, help="rounds T")
    p.add_argument("--step-size", type=float, default=step_default, help="eta (0 derives it from the regret constants)")
    p.add_argument("--update-rule", choices=("euclidean", "exponentiated"), default="euclidean")
    p.add_argument("--alpha", type=float, default=1.0, help="defender greedy budget expansion")
    p.add_argument("--init", choices=("paper", "uniform"), default="paper")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="electguard", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a random instance")
    _generator_flags(g, experiment=False)

    s = sub.add_parser("solve", parents=[common], help="run one solver on an instance file")
    s.add_argument("instance")
    s.add_argument("--solver", choices=("disjoint", "nondisjoint"), default="nondisjoint")
    s.add_argument("--model", choices=("known", "stochastic", "asymmetric", "adversarial"), default="known")
    s.add_argument("--radius", type=int, default=0, help="flip budget for the adversarial model")
    s.add_argument("--samples", type=int, default=20, help="preference samples for the asymmetric model")
    s.add_argument("--epsilon", type=float, default=0.1, help="FTPL target accuracy")
    s.add_argument("--perturbation-scale", type=float, default=0.0, help="FTPL perturbation scale (0 = 1/epsilon)")
    s.add_argument("--entropic-mode", choices=("closed_form", "exact"), default="closed_form")
    _mirror_flags(s, step_default=0.0)
    s.set_defaults(iterations=None)
    s.add_argument("--certify", action="store_true", help="also compute the exact attacker best response b_u")

    c = sub.add_parser("gap", parents=[common], help="certify strategies with exact best responses")
    c.add_argument("instance")
    c.add_argument("defender", help="defender strategy or solve report")
    c.add_argument("attacker", nargs="?", help="attacker strategy (defaults to the one in the report)")
    c.add_argument("--radius", type=int, default=0, help="flip budget (adversarial strategies)")
    c.add_argument("--cap", type=int, default=DEFAULT_CAP)

    for name, text in (("table", "optimality-gap table"), ("sweep", "budget sweep"), ("uncertainty", "uncertainty suite")):
        e = sub.add_parser(name, parents=[common], help=text)
        _generator_flags(e, experiment=True)
        _mirror_flags(e, step_default=EXPERIMENT_STEP)
        defaults = {"table": ("3,5", "3,5"), "sweep": ("1,3,5", "0,1,3,5"), "uncertainty": ("3", "3")}[name]
        e.add_argument("--ka-values", type=_ints, default=_ints(defaults[0]))
        e.add_argument("--kd-values", type=_ints, default=_ints(defaults[1]))
        e.add_argument("--radius-values", type=_ints, default=(0, 2, 4, 8))
        e.add_argument("--replications", type=int, default=10)
        e.add_argument("--samples", type=int, default=20)
        e.add_argument("--cap", type=int, default=DEFAULT_CAP)
    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(a) -> None:
    inst, prefs = generate_instance(
        a.m, a.n, a.ka, a.kd, degree=tuple(a.degree), p_range=tuple(a.p_range), q_range=tuple(a.q_range),
        theta_prob=a.theta_prob, disjoint=a.disjoint, seed=a.seed,
    )
    _emit(io.dumps(io.instance_to_dict(inst, prefs)), a.output)


def _point_weights(inst, prefs) -> np.ndarray:
    if prefs is None:
        raise ConfigError("instance file has no preferences")
    if isinstance(prefs, Known):
        return prefs.theta.astype(float)
    if isinstance(prefs, Marginals):
        return substitute_marginals(inst, prefs)
    if isinstance(prefs, Adversarial):
        return prefs.theta_hat.astype(float)
    return prefs.thetas.mean(axis=0)


def _cmd_solve(a) -> None:
    inst, prefs = io.load_instance(a.instance)
    w = _point_weights(inst, prefs)
    rng = np.random.default_rng(a.seed)
    if a.model == "stochastic":
        w = substitute_marginals(inst, prefs) if isinstance(prefs, Marginals) else np.full(inst.num_voters, 0.5)
    samples = None
    if a.model == "asymmetric":
        samples = prefs.thetas if isinstance(prefs, Samples) else (rng.random((a.samples, inst.num_voters)) < w).astype(float)
    if a.model == "adversarial" and not np.all((w == 0) | (w == 1)):
        raise ConfigError("the adversarial model needs a 0/1 preference estimate")

    report = {"format": io.REPORT_FORMAT, "solver": a.solver, "model": a.model, "seed": a.seed, "radius": a.radius}
    cert_inst = inst
    if a.solver == "disjoint":
        cfg = FtplConfig(epsilon=a.epsilon, iterations=a.iterations or 0, perturbation_scale=a.perturbation_scale, seed=a.seed)
        if a.model == "asymmetric":
            tr = ftpl_asymmetric(inst, samples, cfg)
        elif a.model == "adversarial":
            tr = ftpl_adversarial(inst, w, a.radius, cfg)
            cert_inst = adversarial_extend(inst, w, a.radius).instance
        else:
            if not inst.is_disjoint:
                raise StructureError("the disjoint solver needs each voter on at most one channel")
            tr = ftpl_solve(inst, w, cfg)
        defender = tr.defender_mixture
        report.update(iterations=len(tr.defender_history), empirical_value=tr.empirical_value,
                      attacker=io.strategy_to_dict(tr.attacker_mixture, "attacker"))
    else:
        cfg = MirrorConfig(iterations=a.iterations or 50, step_size=a.step_size, update_rule=a.update_rule,
                           budget_expansion=a.alpha, seed=a.seed, init=a.init, entropic_mode=a.entropic_mode)
        if a.model == "asymmetric":
            res = og_asymmetric(inst, samples, cfg)
        elif a.model == "adversarial":
            res, cert_inst = og_adversarial(inst, w, a.radius, cfg)
        else:
            res = online_gradient_solve(inst, w, cfg)
        defender = res.defender_mixture
        report.update(iterations=len(res.defender_history), step_size=res.step_size, greedy_budget=res.greedy_budget,
                      mean_relaxed_value=float(res.values.mean()),
                      attacker=io.marginals_to_dict(res.attacker_marginals, res.final_marginals[0]))
    report["defender"] = io.strategy_to_dict(defender, "defender")
    if a.certify:
        if samples is not None:
            b_u = float(np.mean([exact_attacker_best_response(cert_inst, th, defender)[1] for th in samples]))
        else:
            b_u = exact_attacker_best_response(cert_inst, w, defender)[1]
        report["b_upper"] = b_u
    _emit(io.dumps(report), a.output)


def _load_side(path: str, side: str):
    doc = io.read_json(path)
    if doc.get("format") == io.REPORT_FORMAT:
        doc = doc[side]
    if doc.get("side") != side:
        raise ConfigError(f"{path}: expected a {side} strategy")
    return doc


def _cmd_gap(a) -> None:
    inst, prefs = io.load_instance(a.instance)
    w = _point_weights(inst, prefs)
    if a.radius:
        inst = adversarial_extend(inst, w, a.radius).instance
    sigma_d, _ = io.strategy_from_dict(_load_side(a.defender, "defender"))
    attacker = io.attacker_from_dict(_load_side(a.attacker or a.defender, "attacker"))
    candidates = attacker if isinstance(attacker, list) else [attacker]
    s_a, b_u = exact_attacker_best_response(inst, w, sigma_d, a.cap)
    b_l = max(exact_defender_best_response(inst, w, x, cap=a.cap)[1] for x in candidates)
    gap = (b_u - b_l) / b_l if b_l > 0 else math.nan
    lines = [f"b_upper {b_u!r}", f"b_lower {b_l!r}", f"gap {'undefined' if b_l <= 0 else repr(gap)}",
             f"attacker_response {list(s_a)}"]
    _emit("\n".join(lines) + "\n", a.output)


def _experiment_config(a) -> ExperimentConfig:
    return ExperimentConfig(
        m=a.m, n=a.n, degree=tuple(a.degree), p_range=tuple(a.p_range), q_range=tuple(a.q_range),
        theta_prob=a.theta_prob, iterations=a.iterations, step_size=a.step_size, update_rule=a.update_rule,
        budget_expansion=a.alpha, init=a.init, k_a_values=a.ka_values, k_d_values=a.kd_values,
        radius_values=a.radius_values, samples=a.samples, replications=a.replications,
        master_seed=a.seed, cap=a.cap, output_dir=a.output,
    )


def _cmd_experiment(a) -> None:
    cfg = _experiment_config(a)
    if a.command == "table":
        sys.stdout.write(run_gap_table(cfg).text)
    elif a.command == "sweep":
        r = run_budget_sweep(cfg)
        sys.stdout.write(r.text)
        log.info("trend flags: nonincreasing in k_d=%s, nondecreasing in k_a=%s", r.nonincreasing_in_kd, r.nondecreasing_in_ka)
    else:
        sys.stdout.write(run_uncertainty_suite(cfg).text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=max(logging.DEBUG, logging.WARNING - 10 * a.verbose),
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"gen": _cmd_gen, "solve": _cmd_solve, "gap": _cmd_gap}
    try:
        handlers.get(a.command, _cmd_experiment)(a)
    except _ERRORS as exc:
        print(f"electguard: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
