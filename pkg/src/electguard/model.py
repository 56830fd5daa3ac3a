"""Game data types and closed-form payoff evaluators.

Every evaluator takes a real-valued per-voter weight vector in place of the
preference bits, so known preferences (0/1 weights) and stochastic
preferences (marginal probabilities) share one code path.

Instances built by :func:`adversarial_extend` carry trailing pseudo-channels.
Selecting pseudo-channel ``v'`` guarantees reach of voter ``v`` and raises its
weight to 1, which shows up in every evaluator as an additive activation term
``(1 - w_v) * D_v * z_v`` where ``D_v`` is the defense survival probability
and ``z_v`` the (marginal) selection of ``v'``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, InvalidStrategyError, StructureError

PureStrategy = tuple[int, ...]

FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GameInstance:
    """Bipartite channel-voter game.

    ``edges`` holds ``(channel, voter, p, q)`` tuples. The last
    ``len(pseudo_voters)`` channels are pseudo-channels; ``pseudo_voters[i]``
    is the voter activated by pseudo-channel ``num_real + i`` and
    ``flip_budget`` bounds how many of them the attacker may pick.
    """

    num_channels: int
    num_voters: int
    edges: tuple[tuple[int, int, float, float], ...]
    attacker_budget: int
    defender_budget: int
    pseudo_voters: tuple[int, ...] = ()
    flip_budget: int = 0

    @classmethod
    def from_edges(
        cls,
        num_channels: int,
        num_voters: int,
        edges: Iterable[Sequence[float]],
        attacker_budget: int,
        defender_budget: int,
    ) -> "GameInstance":
        canon = tuple((int(u), int(v), float(p), float(q)) for u, v, p, q in edges)
        return cls(int(num_channels), int(num_voters), canon, int(attacker_budget), int(defender_budget))

    @property
    def num_pseudo(self) -> int:
        return len(self.pseudo_voters)

    @property
    def num_real(self) -> int:
        return self.num_channels - self.num_pseudo

    @cached_property
    def P(self) -> np.ndarray:
        """Dense ``(m, n)`` switch-probability matrix; missing edges are 0."""
        mat = np.zeros((self.num_channels, self.num_voters))
        for u, v, p, _ in self.edges:
            mat[u, v] = p
        mat.setflags(write=False)
        return mat

    @cached_property
    def Q(self) -> np.ndarray:
        mat = np.zeros((self.num_channels, self.num_voters))
        for u, v, _, q in self.edges:
            mat[u, v] = q
        mat.setflags(write=False)
        return mat

    @cached_property
    def activation(self) -> np.ndarray:
        """``(m, n)`` 0/1 matrix marking which voter each pseudo-channel activates."""
        mat = np.zeros((self.num_channels, self.num_voters))
        for i, v in enumerate(self.pseudo_voters):
            mat[self.num_real + i, v] = 1.0
        mat.setflags(write=False)
        return mat

    @cached_property
    def is_disjoint(self) -> bool:
        deg = np.zeros(self.num_voters, dtype=int)
        for _, v, _, _ in self.edges:
            if 0 <= v < self.num_voters:
                deg[v] += 1
        return bool(np.all(deg <= 1))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: list[str]
    disjoint: bool


def validate_instance(inst: GameInstance) -> ValidationReport:
    """Collect every invariant violation of ``inst`` without raising."""
    bad: list[str] = []
    m, n = inst.num_channels, inst.num_voters
    if m < 1:
        bad.append(f"num_channels must be positive, got {m}")
    if n < 1:
        bad.append(f"num_voters must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    deg = [0] * max(n, 0)
    for i, (u, v, p, q) in enumerate(inst.edges):
        if not (0 <= u < m) or not (0 <= v < n):
            bad.append(f"edge {i}: endpoint ({u}, {v}) out of range")
        elif (u, v) in seen:
            bad.append(f"edge {i}: duplicate edge ({u}, {v})")
        else:
            seen.add((u, v))
            deg[v] += 1
        for name, val in (("p", p), ("q", q)):
            if not (0.0 <= val <= 1.0):
                bad.append(f"edge {i}: probability out of range ({name}={val})")
    if not (1 <= inst.attacker_budget <= inst.num_real):
        bad.append(f"attacker budget {inst.attacker_budget} not in [1, {inst.num_real}]")
    if not (1 <= inst.defender_budget <= inst.num_real):
        bad.append(f"defender budget {inst.defender_budget} not in [1, {inst.num_real}]")
    if inst.num_pseudo and not (0 <= inst.flip_budget <= inst.num_pseudo):
        bad.append(f"flip budget {inst.flip_budget} not in [0, {inst.num_pseudo}]")
    disjoint = all(d <= 1 for d in deg)
    return ValidationReport(ok=not bad, violations=bad, disjoint=disjoint)


def require_valid(inst: GameInstance) -> None:
    report = validate_instance(inst)
    if not report.ok:
        raise StructureError("invalid instance: " + "; ".join(report.violations))


# --- preference models -------------------------------------------------------


def _bits(arr: Sequence[int], name: str) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 1 or not np.all((a == 0) | (a == 1)):
        raise DomainError(f"{name} must be a vector of 0/1 bits")
    return a.astype(float)


@dataclass(frozen=True, eq=False)
class Known:
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _bits(self.theta, "theta"))


@dataclass(frozen=True, eq=False)
class Marginals:
    probs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=float)
        if a.ndim != 1 or np.any(a < 0) or np.any(a > 1):
            raise DomainError("marginal probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", a)


@dataclass(frozen=True, eq=False)
class Samples:
    thetas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.thetas)
        if a.ndim != 2 or a.shape[0] < 1:
            raise DomainError("samples must be a non-empty list of equal-length bit vectors")
        if not np.all((a == 0) | (a == 1)):
            raise DomainError("samples must contain only 0/1 entries")
        object.__setattr__(self, "thetas", a.astype(float))


@dataclass(frozen=True, eq=False)
class Adversarial:
    theta_hat: np.ndarray
    radius: int

    def __post_init__(self):
        th = _bits(self.theta_hat, "theta_hat")
        if not (0 <= int(self.radius) <= th.size):
            raise DomainError(f"radius {self.radius} not in [0, {th.size}]")
        object.__setattr__(self, "theta_hat", th)
        object.__setattr__(self, "radius", int(self.radius))


PreferenceModel = Union[Known, Marginals, Samples, Adversarial]


def substitute_marginals(inst: GameInstance, model: Marginals) -> np.ndarray:
    """Voter weights reproducing the stochastic objective: ``w_v = Pr[theta_v = 1]``."""
    if not isinstance(model, Marginals):
        raise TypeError("substitute_marginals expects a Marginals model")
    if model.probs.size != inst.num_voters:
        raise DomainError("marginal vector length does not match the number of voters")
    return model.probs.copy()


# --- strategies ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Finitely supported distribution over pure strategies."""

    support: tuple[PureStrategy, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.support) == 0:
            raise DomainError("mixed strategy support must be nonempty")
        if w.shape != (len(self.support),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise DomainError("mixed strategy weights must be nonnegative and sum to 1")
        object.__setattr__(self, "support", tuple(tuple(sorted(int(u) for u in s)) for s in self.support))
        object.__setattr__(self, "weights", w)

    @classmethod
    def pure(cls, s: Iterable[int]) -> "MixedStrategy":
        return cls((tuple(s),), np.ones(1))

    @classmethod
    def uniform(cls, history: Sequence[Iterable[int]]) -> "MixedStrategy":
        """Empirical distribution of ``history``; repeated sets are merged."""
        counts: dict[PureStrategy, int] = {}
        for s in history:
            key = tuple(sorted(int(u) for u in s))
            counts[key] = counts.get(key, 0) + 1
        total = sum(counts.values())
        return cls(tuple(counts), np.array([c / total for c in counts.values()]))


@dataclass(frozen=True, eq=False)
class MarginalVector:
    """Fractional attacker strategy: ``0 <= x <= 1`` with ``sum(x) <= budget``."""

    x: np.ndarray
    budget: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or np.any(x < -FEAS_TOL) or np.any(x > 1 + FEAS_TOL):
            raise DomainError("marginal entries must lie in [0, 1]")
        if x.sum() > self.budget + FEAS_TOL:
            raise DomainError(f"marginal mass {x.sum():.6g} exceeds budget {self.budget}")
        object.__setattr__(self, "x", x)


def as_strategy(inst: GameInstance, s: Iterable[int], side: str = "attacker") -> PureStrategy:
    out = tuple(sorted(int(u) for u in s))
    limit = inst.num_channels if side == "attacker" else inst.num_real
    if len(set(out)) != len(out):
        raise InvalidStrategyError(f"duplicate channels in {out}")
    for u in out:
        if not 0 <= u < limit:
            raise InvalidStrategyError(f"channel {u} out of range for the {side} (limit {limit})")
    return out


def _weights(inst: GameInstance, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (inst.num_voters,):
        raise DomainError(f"weight vector must have length {inst.num_voters}")
    return w


def _marginal(inst: GameInstance, x) -> np.ndarray:
    arr = x.x if isinstance(x, MarginalVector) else np.asarray(x, dtype=float)
    if arr.shape != (inst.num_channels,):
        raise DomainError(f"marginal vector must have length {inst.num_channels}")
    if np.any(arr < -FEAS_TOL) or np.any(arr > 1 + FEAS_TOL):
        raise DomainError("marginal entries must lie in [0, 1]")
    return arr


# --- evaluators ----------------------------------------------------------------


def defense_survival(inst: GameInstance, s_d: PureStrategy) -> np.ndarray:
    """Per-voter probability of not being immunized by ``s_d``."""
    out = np.ones(inst.num_voters)
    for u in s_d:
        out *= 1.0 - inst.Q[u]
    return out


def attack_failure(inst: GameInstance, s_a: PureStrategy) -> np.ndarray:
    """Per-voter probability that no channel in ``s_a`` reaches the voter."""
    out = np.ones(inst.num_voters)
    for u in s_a:
        out *= 1.0 - inst.P[u]
    return out


def _pure_exposure(inst: GameInstance, w: np.ndarray, s_a: PureStrategy) -> np.ndarray:
    expo = w * (1.0 - attack_failure(inst, s_a))
    if inst.num_pseudo:
        z = inst.activation[list(s_a)].sum(axis=0) if s_a else np.zeros(inst.num_voters)
        expo = expo + (1.0 - w) * z
    return expo


def payoff(inst: GameInstance, weights, s_d: Iterable[int], s_a: Iterable[int]) -> float:
    """Expected number of switched voters ``f(S_d, S_a)``."""
    w = _weights(inst, weights)
    s_d = as_strategy(inst, s_d, "defender")
    s_a = as_strategy(inst, s_a, "attacker")
    return float(np.dot(defense_survival(inst, s_d), _pure_exposure(inst, w, s_a)))


def exposure(inst: GameInstance, weights, attacker) -> np.ndarray:
    """Expected per-voter attack exposure under an attacker strategy.

    ``attacker`` may be a pure strategy, a :class:`MixedStrategy`, or a
    marginal vector (independent inclusion). The expected payoff against any
    defense ``S_d`` is then ``exposure @ defense_survival(S_d)``.
    """
    w = _weights(inst, weights)
    if isinstance(attacker, MixedStrategy):
        out = np.zeros(inst.num_voters)
        for s, wt in zip(attacker.support, attacker.weights):
            out += wt * _pure_exposure(inst, w, as_strategy(inst, s, "attacker"))
        return out
    if isinstance(attacker, MarginalVector) or (isinstance(attacker, np.ndarray) and attacker.dtype.kind == "f"):
        x = _marginal(inst, attacker)
        fail = np.prod(1.0 - x[:, None] * inst.P, axis=0)
        expo = w * (1.0 - fail)
        if inst.num_pseudo:
            expo = expo + (1.0 - w) * (x @ inst.activation)
        return expo
    return _pure_exposure(inst, w, as_strategy(inst, attacker, "attacker"))


def defender_survival(inst: GameInstance, sigma_d: MixedStrategy) -> np.ndarray:
    """``E_{S_d ~ sigma_d}`` of the per-voter survival probability."""
    out = np.zeros(inst.num_voters)
    for s, wt in zip(sigma_d.support, sigma_d.weights):
        out += wt * defense_survival(inst, as_strategy(inst, s, "defender"))
    return out


def payoff_vs_mixed(inst: GameInstance, weights, sigma: MixedStrategy, pure: Iterable[int], side: str) -> float:
    """Expected payoff when ``side`` ('defender' or 'attacker') plays ``sigma``."""
    if side == "defender":
        s_a = as_strategy(inst, pure, "attacker")
        return float(np.dot(defender_survival(inst, sigma), _pure_exposure(inst, _weights(inst, weights), s_a)))
    if side == "attacker":
        s_d = as_strategy(inst, pure, "defender")
        return float(np.dot(exposure(inst, weights, sigma), defense_survival(inst, s_d)))
    raise ValueError(f"side must be 'defender' or 'attacker', got {side!r}")


def disjoint_decompose(inst: GameInstance, weights) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel ``(a_u, b_u)`` with ``f = sum_{S_a} a - sum_{S_a & S_d} b``."""
    if not inst.is_disjoint or inst.num_pseudo:
        raise StructureError("disjoint_decompose requires a disjoint instance")
    w = _weights(inst, weights)
    a = np.zeros(inst.num_channels)
    b = np.zeros(inst.num_channels)
    for u, v, p, q in inst.edges:
        a[u] += w[v] * p
        b[u] += w[v] * p * q
    return a, b


def _feasible_marginal(inst: GameInstance, x) -> np.ndarray:
    arr = _marginal(inst, x)
    budget = inst.attacker_budget + inst.flip_budget
    if arr.sum() > budget + FEAS_TOL:
        raise DomainError(f"marginal mass {arr.sum():.6g} exceeds the attacker budget {budget}")
    return arr


def multilinear_extension(inst: GameInstance, weights, x, s_d: Iterable[int] = ()) -> float:
    """``F(x | S_d)``: expected payoff when channel ``u`` is attacked independently w.p. ``x_u``."""
    s_d = as_strategy(inst, s_d, "defender")
    return float(np.dot(defense_survival(inst, s_d), exposure(inst, weights, _feasible_marginal(inst, x))))


def multilinear_gradient(inst: GameInstance, weights, x, s_d: Iterable[int] = ()) -> np.ndarray:
    """Gradient of ``F(. | S_d)`` at ``x``.

    Leave-one-out products come from dividing the cached per-voter product by
    the excluded factor; voters with a zero factor are recomputed directly.
    """
    w = _weights(inst, weights)
    x = _feasible_marginal(inst, x)
    s_d = as_strategy(inst, s_d, "defender")
    surv = defense_survival(inst, s_d)
    fac = 1.0 - x[:, None] * inst.P
    full = fac.prod(axis=0)
    zero = fac == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        excl = np.where(zero, 0.0, full / np.where(zero, 1.0, fac))
    for v in np.flatnonzero(zero.any(axis=0)):
        col = fac[:, v]
        for u in range(inst.num_channels):
            excl[u, v] = np.prod(np.delete(col, u))
    grad = (inst.P * excl) @ (w * surv)
    if inst.num_pseudo:
        grad = grad + inst.activation @ ((1.0 - w) * surv)
    return grad


def blocked_influence(inst: GameInstance, weights, s_d: Iterable[int], attacker) -> float:
    """``g(S_d) = E[f(emptyset, S_a)] - E[f(S_d, S_a)]`` for the given attacker."""
    s_d = as_strategy(inst, s_d, "defender")
    return float(np.dot(exposure(inst, weights, attacker), 1.0 - defense_survival(inst, s_d)))


class AdversarialGame(NamedTuple):
    instance: GameInstance
    weights: np.ndarray
    budgets: tuple[int, int]


def adversarial_extend(inst: GameInstance, theta_hat, radius: int) -> AdversarialGame:
    """Add one undefendable pseudo-channel per voter (``p=1, q=0``).

    The attacker may then pick up to ``k_a`` real channels and up to
    ``radius`` pseudo-channels; picking ``v'`` reaches ``v`` for sure and
    counts it with weight 1.
    """
    if inst.num_pseudo:
        raise StructureError("instance is already extended")
    th = _bits(theta_hat, "theta_hat")
    if th.size != inst.num_voters:
        raise DomainError("theta_hat length does not match the number of voters")
    if not 0 <= radius <= inst.num_voters:
        raise DomainError(f"radius {radius} not in [0, {inst.num_voters}]")
    m, n = inst.num_channels, inst.num_voters
    edges = inst.edges + tuple((m + v, v, 1.0, 0.0) for v in range(n))
    ext = GameInstance(
        num_channels=m + n,
        num_voters=n,
        edges=edges,
        attacker_budget=inst.attacker_budget,
        defender_budget=inst.defender_budget,
        pseudo_voters=tuple(range(n)),
        flip_budget=int(radius),
    )
    return AdversarialGame(ext, th, (inst.attacker_budget, int(radius)))


def monte_carlo_payoff(
    inst: GameInstance,
    weights,
    s_d: Iterable[int],
    s_a: Iterable[int],
    trials: int,
    seed: int,
    batch: int = 20000,
) -> tuple[float, float]:
    """Simulate immunization and reach events; return (mean switches, standard error).

    Fractional weights are sampled as Bernoulli preference bits.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    w = _weights(inst, weights)
    s_d = as_strategy(inst, s_d, "defender")
    s_a = as_strategy(inst, s_a, "attacker")
    rng = np.random.default_rng(seed)
    d_set, a_set = set(s_d), set(s_a)
    d_edges = [(v, q) for u, v, _, q in inst.edges if u in d_set and q > 0]
    a_edges = [(v, p) for u, v, p, _ in inst.edges if u in a_set and p > 0]
    n = inst.num_voters
    activated = np.zeros(n, dtype=bool)
    for u in s_a:
        if u >= inst.num_real:
            activated[inst.pseudo_voters[u - inst.num_real]] = True

    def incidence(pairs):
        mat = np.zeros((len(pairs), n))
        for i, (v, _) in enumerate(pairs):
            mat[i, v] = 1.0
        return mat, np.array([pr for _, pr in pairs])

    d_inc, d_prob = incidence(d_edges)
    a_inc, a_prob = incidence(a_edges)
    totals = np.empty(trials)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        pref = (rng.random((b, n)) < w) | activated
        immune = (rng.random((b, len(d_edges))) < d_prob).astype(float) @ d_inc > 0
        reached = (rng.random((b, len(a_edges))) < a_prob).astype(float) @ a_inc > 0
        totals[done : done + b] = (pref & ~immune & reached).sum(axis=1)
        done += b
    mean = float(totals.mean())
    se = float(totals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return mean, se
