"""Online mirror ascent over attacker marginals against greedy defender responses.

Each round the defender greedily best-responds to the current attacker
marginals (blocked influence is monotone submodular), then every attacker
marginal vector takes a gradient step on the multilinear extension induced
by that defense and is projected back onto its capped simplex (per block
when the attacker also controls flip pseudo-channels).
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model import (
    GameInstance,
    MixedStrategy,
    PureStrategy,
    exposure,
    _weights,
    adversarial_extend,
    multilinear_extension,
    multilinear_gradient,
)
from .projections import project_partition

log = logging.getLogger(__name__)

EXPERIMENT_STEP = 0.05


@dataclass(frozen=True)
class MirrorConfig:
    iterations: int = 50
    step_size: float = 0.0
    update_rule: str = "euclidean"
    budget_expansion: float = 1.0
    epsilon: float = 0.1
    seed: int = 0
    init: str = "paper"
    entropic_mode: str = "closed_form"

    def __post_init__(self):
        if self.iterations < 1:
            raise DomainError("iterations must be >= 1")
        if self.budget_expansion < 1:
            raise DomainError("budget_expansion must be >= 1")
        if self.step_size < 0:
            raise DomainError("step_size must be nonnegative (0 derives it)")
        if self.update_rule not in ("euclidean", "exponentiated"):
            raise DomainError(f"unknown update rule {self.update_rule!r}")
        if self.init not in ("paper", "uniform"):
            raise DomainError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class RegretConstants:
    L: float
    D: float
    b: float

    def step_size(self, T: int) -> float:
        return 1.0 / (self.L * math.sqrt(2 * T))

    def slack(self, T: int) -> float:
        """Additive no-regret term ``sqrt(2) L D / sqrt(T)``."""
        return math.sqrt(2) * self.L * self.D / math.sqrt(T)


def regret_constants(inst: GameInstance, weights, update_rule: str, budget: float) -> RegretConstants:
    w = _weights(inst, weights)
    single = inst.P @ w + inst.activation @ (1.0 - w)
    b = float(single.max())
    m = inst.num_channels
    if update_rule == "euclidean":
        return RegretConstants(L=b * math.sqrt(m), D=math.sqrt(budget), b=b)
    if update_rule == "exponentiated":
        return RegretConstants(L=b, D=budget * math.log(m), b=b)
    raise DomainError(f"unknown update rule {update_rule!r}")


def theorem_bound(tau: float, epsilon: float, constants: RegretConstants, T: int) -> float:
    """Worst-case attacker payoff guaranteed against the averaged defense."""
    return 2.0 * (tau + epsilon + constants.slack(T))


def sample_count_asymmetric(n: int, m: int, T: int, epsilon: float, delta: float) -> int:
    """``n^2 m T / eps^2 * ln(1/delta) * ln(m)`` with leading constant 1."""
    if min(n, m, T, epsilon, delta) <= 0:
        raise DomainError("all arguments must be positive")
    return max(1, math.ceil(n * n * m * T / epsilon**2 * math.log(1.0 / delta) * math.log(m)))


def greedy_cover(Q: np.ndarray, c: np.ndarray, budget: int, lazy: bool = False) -> PureStrategy:
    """Greedy maximization of ``sum_v c_v (1 - prod_{u in S} (1 - Q[u, v]))``.

    Stops at ``budget`` or when no channel has positive marginal gain. Ties go
    to the lowest index, in both the naive and the lazy (priority-queue)
    variant, so the two return identical sets.
    """
    m = Q.shape[0]
    budget = min(int(budget), m)
    cur = c.astype(float).copy()
    chosen: list[int] = []
    if not lazy:
        avail = np.ones(m, dtype=bool)
        for _ in range(budget):
            gains = np.where(avail, (Q * cur).sum(axis=1), -np.inf)
            u = int(np.argmax(gains))
            if gains[u] <= 0:
                break
            chosen.append(u)
            avail[u] = False
            cur *= 1.0 - Q[u]
        return tuple(sorted(chosen))

    heap = [(-float(g), u) for u, g in enumerate((Q * cur).sum(axis=1))]
    heapq.heapify(heap)
    while heap and len(chosen) < budget:
        _, u = heapq.heappop(heap)
        gain = float((Q[u] * cur).sum())
        if not heap or (-gain, u) <= heap[0]:
            if gain <= 0:
                break
            chosen.append(u)
            cur *= 1.0 - Q[u]
        else:
            heapq.heappush(heap, (-gain, u))
    return tuple(sorted(chosen))


def greedy_best_response(inst: GameInstance, weights, attacker, budget: int, lazy: bool = False) -> PureStrategy:
    """Greedy defense against an attacker mixture, marginal vector, or sequence of marginals.

    For a sample average pass ``weights`` as a 2-D array (one row per sample)
    and ``attacker`` as the matching list of marginal vectors.
    """
    if budget < 1:
        raise DomainError("budget must be >= 1")
    w = np.asarray(weights, dtype=float)
    if w.ndim == 2:
        c = np.mean([exposure(inst, wj, xj) for wj, xj in zip(w, attacker)], axis=0)
    elif isinstance(attacker, list) and attacker and isinstance(attacker[0], np.ndarray):
        c = np.mean([exposure(inst, w, x) for x in attacker], axis=0)
    else:
        c = exposure(inst, w, attacker)
    return greedy_cover(inst.Q[: inst.num_real], c, budget, lazy)


@dataclass
class MirrorResult:
    defender_history: list[PureStrategy]
    marginal_traces: list[list[np.ndarray]]
    final_marginals: list[np.ndarray]
    values: np.ndarray
    step_size: float
    constants: RegretConstants
    greedy_budget: int
    blocks: list = field(repr=False, default_factory=list)

    @property
    def defender_mixture(self) -> MixedStrategy:
        return MixedStrategy.uniform(self.defender_history)

    @property
    def attacker_marginals(self) -> list[np.ndarray]:
        """Marginals the defender responded to (``x^0 .. x^{T-1}``) of the first sample."""
        return self.marginal_traces[0]


def _initial(m_real: int, k_a: int, blocks, init: str, dim: int) -> np.ndarray:
    x = np.zeros(dim)
    for idx, budget in blocks:
        idx = np.asarray(idx)
        if idx.size == 0 or budget <= 0:
            continue
        if init == "paper":
            # 1/(m k_a) per coordinate, scaled down if it overflows the block budget
            x[idx] = min(1.0 / (m_real * k_a), budget / idx.size)
        else:
            x[idx] = min(1.0, budget / idx.size)
    return x


def _og_run(
    inst: GameInstance,
    sample_weights: np.ndarray,
    cfg: MirrorConfig,
    blocks: list,
    budget_total: float,
) -> MirrorResult:
    T = cfg.iterations
    constants = regret_constants(inst, sample_weights.mean(axis=0), cfg.update_rule, budget_total)
    if cfg.step_size:
        eta = cfg.step_size
    elif T == 50:
        # the experimental setting; theory value otherwise
        eta = EXPERIMENT_STEP
    else:
        eta = constants.step_size(T)
    greedy_budget = min(math.ceil(cfg.budget_expansion * inst.defender_budget - 1e-12), inst.num_real)
    Q_real = inst.Q[: inst.num_real]
    geometry = "euclidean" if cfg.update_rule == "euclidean" else "entropic"
    x0 = _initial(inst.num_real, inst.attacker_budget, blocks, cfg.init, inst.num_channels)
    xs = [x0.copy() for _ in sample_weights]
    traces: list[list[np.ndarray]] = [[] for _ in sample_weights]
    hist: list[PureStrategy] = []
    values = np.empty(T)
    log.info("online gradient: T=%d, eta=%.4g, rule=%s, greedy budget=%d", T, eta, cfg.update_rule, greedy_budget)
    for t in range(T):
        c = np.mean([exposure(inst, wj, xj) for wj, xj in zip(sample_weights, xs)], axis=0)
        s_d = greedy_cover(Q_real, c, greedy_budget)
        hist.append(s_d)
        vals = []
        for j, wj in enumerate(sample_weights):
            x = xs[j]
            traces[j].append(x)
            vals.append(multilinear_extension(inst, wj, x, s_d))
            grad = multilinear_gradient(inst, wj, x, s_d)
            if geometry == "euclidean":
                y = x + eta * grad
            else:
                y = x * np.exp(eta * grad)
            xs[j] = project_partition(y, blocks, geometry, cfg.entropic_mode)
        values[t] = np.mean(vals)
    return MirrorResult(hist, traces, xs, values, eta, constants, greedy_budget, blocks)


def online_gradient_solve(inst: GameInstance, weights, cfg: MirrorConfig) -> MirrorResult:
    """Mirror ascent for the attacker vs greedy defense; the defender plays uniformly over its history."""
    w = _weights(inst, weights)[None, :]
    blocks = [(list(range(inst.num_channels)), inst.attacker_budget)]
    return _og_run(inst, w, cfg, blocks, inst.attacker_budget)


def og_asymmetric(inst: GameInstance, samples, cfg: MirrorConfig) -> MirrorResult:
    """One attacker marginal per preference sample; the defender greedily answers their average."""
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    if s.shape[0] < 1 or s.shape[1] != inst.num_voters:
        raise DomainError("samples must be a nonempty (N, n) array")
    blocks = [(list(range(inst.num_channels)), inst.attacker_budget)]
    return _og_run(inst, s, cfg, blocks, inst.attacker_budget)


def og_adversarial(inst: GameInstance, theta_hat, radius: int, cfg: MirrorConfig) -> tuple[MirrorResult, GameInstance]:
    """Mirror ascent on the flip-extended game; returns the result and the extended instance."""
    game = adversarial_extend(inst, theta_hat, radius)
    ext = game.instance
    m = inst.num_channels
    blocks = [(list(range(m)), inst.attacker_budget), (list(range(m, ext.num_channels)), radius)]
    res = _og_run(ext, game.weights[None, :], cfg, blocks, inst.attacker_budget + radius)
    return res, ext
