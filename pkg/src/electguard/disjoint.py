"""Follow-The-Perturbed-Leader self-play for disjoint populations.

On a disjoint instance each voter hangs off a single channel, so both
players' payoffs are linear in their own indicator vectors and each FTPL step
is a top-k selection. Scores are cumulative *rewards* (largest-k), which is
FTPL on the corresponding losses without the sign ambiguity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StructureError
from .model import GameInstance, MixedStrategy, PureStrategy, _weights, adversarial_extend
from .projections import top_k

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FtplConfig:
    epsilon: float
    iterations: int = 0
    perturbation_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        if self.perturbation_scale < 0 or self.iterations < 0:
            raise DomainError("iterations and perturbation_scale must be nonnegative")

    @property
    def scale(self) -> float:
        return self.perturbation_scale or 1.0 / self.epsilon


@dataclass
class FtplTrace:
    attacker_history: list[PureStrategy]
    defender_history: list[PureStrategy]
    attacker_cumulative: np.ndarray
    defender_cumulative: np.ndarray
    defender_realized: float
    payoffs: np.ndarray = field(repr=False)
    sample_attacker_histories: list[list[PureStrategy]] = field(default_factory=list)

    @property
    def attacker_mixture(self) -> MixedStrategy:
        return MixedStrategy.uniform(self.attacker_history)

    @property
    def defender_mixture(self) -> MixedStrategy:
        return MixedStrategy.uniform(self.defender_history)

    @property
    def empirical_value(self) -> float:
        """Average on-path payoff ``(1/T) sum_t f(S_d^t, S_a^t)``."""
        return float(self.payoffs.mean())


def iterations_for_epsilon(n: int, k_a: int, k_d: int, epsilon: float, flip_budget: int = 0) -> int:
    """``ceil(4 n^2 max{k_a + flip_budget, k_d} / epsilon^2)``."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    return math.ceil(4 * n * n * max(k_a + flip_budget, k_d) / epsilon**2)


class _DisjointRewards:
    """Per-round linear rewards of a disjoint instance, optionally with flip actions.

    Attacker reward on real channel ``u`` given ``S_d`` is ``a_u - [u in S_d] b_u``;
    on pseudo-channel ``v'`` it is the survival of ``v`` (reach and weight 1).
    Defender reward on ``u`` is ``sum_{v in V_u} q_uv * exposure_v(S_a)``.
    """

    def __init__(self, inst: GameInstance, weights):
        if not inst.is_disjoint:
            raise StructureError("FTPL requires a disjoint instance (each voter on at most one channel)")
        self.m, self.n = inst.num_channels, inst.num_voters
        self.w = _weights(inst, weights)
        owner = np.full(self.n, -1)
        pv = np.zeros(self.n)
        qv = np.zeros(self.n)
        for u, v, p, q in inst.edges:
            owner[v], pv[v], qv[v] = u, p, q
        self.has = owner >= 0
        self.owner = np.where(self.has, owner, 0)
        self.pv, self.qv = pv, qv
        self.a = np.bincount(self.owner[self.has], (self.w * pv)[self.has], minlength=self.m)
        self.b = np.bincount(self.owner[self.has], (self.w * pv * qv)[self.has], minlength=self.m)

    def attacker(self, s_d: PureStrategy, with_flips: bool = False) -> np.ndarray:
        ind = np.zeros(self.m)
        ind[list(s_d)] = 1.0
        real = self.a - ind * self.b
        if not with_flips:
            return real
        surv = 1.0 - self.has * ind[self.owner] * self.qv
        return np.concatenate([real, surv])

    def exposure(self, s_a: PureStrategy) -> np.ndarray:
        ind = np.zeros(self.m + self.n)
        ind[list(s_a)] = 1.0
        flipped = ind[self.m :]
        hit = self.has * ind[: self.m][self.owner] * self.pv * self.w
        return np.where(flipped > 0, 1.0, hit)

    def defender(self, s_a: PureStrategy) -> np.ndarray:
        expo = self.exposure(s_a)
        return np.bincount(self.owner[self.has], (self.qv * expo)[self.has], minlength=self.m)

    def payoff(self, s_d: PureStrategy, s_a: PureStrategy) -> float:
        ind = np.zeros(self.m)
        ind[list(s_d)] = 1.0
        surv = 1.0 - self.has * ind[self.owner] * self.qv
        return float(surv @ self.exposure(s_a))


def _default_iterations(inst: GameInstance, cfg: FtplConfig, flip_budget: int = 0) -> int:
    if cfg.iterations:
        return cfg.iterations
    return iterations_for_epsilon(inst.num_voters, inst.attacker_budget, inst.defender_budget, cfg.epsilon, flip_budget)


def _lowest(k: int) -> PureStrategy:
    return tuple(range(k))


def ftpl_solve(inst: GameInstance, weights, cfg: FtplConfig) -> FtplTrace:
    """FTPL self-play; uniform mixtures over the histories form an epsilon-equilibrium."""
    return _run(inst, [weights], cfg, flip_budget=None)


def ftpl_asymmetric(inst: GameInstance, samples, cfg: FtplConfig) -> FtplTrace:
    """One attacker FTPL per preference sample; the defender follows the sample-average reward."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] < 1:
        raise DomainError("need at least one sample")
    return _run(inst, list(samples), cfg, flip_budget=None)


def ftpl_adversarial(inst: GameInstance, theta_hat, radius: int, cfg: FtplConfig) -> FtplTrace:
    """FTPL where the attacker also picks up to ``radius`` voters to flip.

    Attacker strategies are reported in extended-instance indices
    (pseudo-channel of voter ``v`` is ``m + v``).
    """
    if not inst.is_disjoint:
        raise StructureError("FTPL requires a disjoint instance (each voter on at most one channel)")
    game = adversarial_extend(inst, theta_hat, radius)
    return _run(inst, [game.weights], cfg, flip_budget=radius)


def _run(inst: GameInstance, sample_weights: list, cfg: FtplConfig, flip_budget: int | None) -> FtplTrace:
    rewards = [_DisjointRewards(inst, w) for w in sample_weights]
    m, n = inst.num_channels, inst.num_voters
    k_a, k_d = inst.attacker_budget, inst.defender_budget
    flips = flip_budget is not None
    ell = flip_budget or 0
    T = _default_iterations(inst, cfg, ell)
    scale = cfg.scale
    rng = np.random.default_rng(cfg.seed)
    N = len(rewards)
    dim_a = m + n if flips else m

    cum_a = [np.zeros(dim_a) for _ in range(N)]
    cum_d = np.zeros(m)
    s_d: PureStrategy = _lowest(k_d)
    s_a: list[PureStrategy] = [_lowest(k_a)] * N
    hist_d: list[PureStrategy] = []
    hist_a: list[list[PureStrategy]] = [[] for _ in range(N)]
    realized = 0.0
    payoffs = np.empty(T)
    log.info("FTPL: T=%d, N=%d, perturbation scale %.4g", T, N, scale)

    for t in range(T):
        pert_a = [rng.uniform(0.0, scale, dim_a) for _ in range(N)]
        pert_d = rng.uniform(0.0, scale, m)
        for j in range(N):
            score = cum_a[j] + pert_a[j]
            chosen = top_k(score[:m], k_a)
            if flips:
                chosen = chosen + tuple(m + i for i in top_k(score[m:], ell))
            s_a[j] = chosen
        s_d = top_k(cum_d + pert_d, k_d)

        if N == 1:
            r_d = rewards[0].defender(s_a[0])
        else:
            r_d = np.sum([rw.defender(sa) for rw, sa in zip(rewards, s_a)], axis=0) / N
        realized += float(r_d[list(s_d)].sum())
        cum_d += r_d
        for j in range(N):
            cum_a[j] += rewards[j].attacker(s_d, flips)
            hist_a[j].append(s_a[j])
        hist_d.append(s_d)
        payoffs[t] = np.mean([rw.payoff(s_d, sa) for rw, sa in zip(rewards, s_a)])

    return FtplTrace(
        attacker_history=hist_a[0],
        defender_history=hist_d,
        attacker_cumulative=cum_a[0],
        defender_cumulative=cum_d,
        defender_realized=realized,
        payoffs=payoffs,
        sample_attacker_histories=hist_a if N > 1 else [],
    )
