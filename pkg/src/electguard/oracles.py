"""Exact ground-truth machinery for desk-scale instances.

Best responses are computed by exhaustive enumeration of budget-size subsets.
Both objectives reduce to minimizing ``sum_v c_v * prod_{u in S} M[u, v]``:

* defender vs an attacker: ``c`` is the attacker's expected exposure and
  ``M = 1 - Q``;
* attacker vs a defender mixture: ``c`` is the weighted mean survival and
  ``M = 1 - P`` (maximizing reach is minimizing the failure product).

Enumeration runs depth-first with cached prefix products and vectorizes the
last element, so the leaf cost is one ``(m, n)`` multiply per prefix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, ResourceError
from .model import (
    GameInstance,
    MarginalVector,
    MixedStrategy,
    PureStrategy,
    _weights,
    attack_failure,
    defender_survival,
    defense_survival,
    exposure,
)

DEFAULT_CAP = 5_000_000


def _search_min(
    M: np.ndarray,
    k: int,
    score: Callable[[np.ndarray], np.ndarray],
    cap: int = DEFAULT_CAP,
) -> tuple[PureStrategy, float]:
    """Lexicographically-first ``k``-subset of rows minimizing ``score(prod of rows)``."""
    m, n = M.shape
    k = min(k, m)
    if math.comb(m, k) > cap:
        raise ResourceError(f"C({m}, {k}) = {math.comb(m, k)} subsets exceeds the cap {cap}")
    if k == 0:
        return (), float(score(np.ones((1, n)))[0])
    best_val = math.inf
    best_set: PureStrategy = ()

    def rec(start: int, depth: int, prefix: np.ndarray, chosen: PureStrategy):
        nonlocal best_val, best_set
        if depth == k - 1:
            vals = score(prefix * M[start:])
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val = float(vals[i])
                best_set = chosen + (start + i,)
            return
        for j in range(start, m - (k - 1 - depth)):
            rec(j + 1, depth + 1, prefix * M[j], chosen + (j,))

    rec(0, 0, np.ones(n), ())
    return best_set, best_val


def _real_channels(inst: GameInstance) -> np.ndarray:
    return np.arange(inst.num_real)


def _mean_exposure(inst: GameInstance, weights, attacker) -> np.ndarray:
    """Exposure for one attacker strategy or the uniform average of a sequence of marginals."""
    if isinstance(attacker, (list, tuple)) and attacker and isinstance(attacker[0], (MarginalVector, np.ndarray)):
        return np.mean([exposure(inst, weights, x) for x in attacker], axis=0)
    return exposure(inst, weights, attacker)


def exact_defender_best_response(
    inst: GameInstance, weights, attacker, budget: int | None = None, cap: int = DEFAULT_CAP
) -> tuple[PureStrategy, float]:
    """Exact ``argmin_{|S_d| <= k_d} E[f(S_d, S_a)]`` and its value ``b_l``.

    ``attacker`` may be a pure set, a :class:`MixedStrategy`, a marginal
    vector, or a sequence of marginal vectors (uniform mixture).
    """
    c = _mean_exposure(inst, weights, attacker)
    k = inst.defender_budget if budget is None else budget
    M = 1.0 - inst.Q[: inst.num_real]
    return _search_min(M, k, lambda R: R @ c, cap)


def exact_attacker_best_response(
    inst: GameInstance, weights, sigma_d: MixedStrategy, cap: int = DEFAULT_CAP
) -> tuple[PureStrategy, float]:
    """Exact ``argmax`` over the attacker's feasible set of ``E_{sigma_d}[f]`` and its value ``b_u``.

    On extended instances the feasible set is ``k_a`` real channels plus up to
    ``flip_budget`` pseudo-channels. For a fixed real set the best pseudo
    choice is the top-``flip_budget`` voters by marginal gain, so only the
    real channels are enumerated.
    """
    w = _weights(inst, weights)
    surv = defender_survival(inst, sigma_d)
    c = w * surv
    total = c.sum()
    M = 1.0 - inst.P[: inst.num_real]
    ell = min(inst.flip_budget, inst.num_pseudo) if inst.num_pseudo else 0
    if ell:
        pv = np.asarray(inst.pseudo_voters)
        surv_p, c_p = surv[pv], c[pv]

        def score(R):
            gains = surv_p - c_p + c_p * R[:, pv]
            top = -np.partition(-gains, ell - 1, axis=1)[:, :ell]
            return -(total - R @ c + top.sum(axis=1))

    else:

        def score(R):
            return -(total - R @ c)

    real, val = _search_min(M, inst.attacker_budget, score, cap)
    if not ell:
        return real, -val
    fail = attack_failure(inst, real)[pv]
    gains = surv_p - c_p + c_p * fail
    order = np.argsort(-gains, kind="stable")[:ell]
    pseudo = tuple(sorted(inst.num_real + int(i) for i in order))
    return real + pseudo, -val


# --- gap certificate -------------------------------------------------------------


@dataclass(frozen=True)
class GapCertificate:
    b_upper: float
    b_lower: float
    gap: float
    defined: bool
    attacker_response: PureStrategy = ()
    defender_response: PureStrategy = ()


def optimality_gap(inst: GameInstance, weights, sigma_d: MixedStrategy, attacker, cap: int = DEFAULT_CAP) -> GapCertificate:
    """Bracket the game value with exact best responses to both mixtures.

    ``b_u`` (attacker best response to ``sigma_d``) certifies the defender's
    worst case; ``b_l`` (defender best response to ``attacker``) lower-bounds
    the value. The gap ``(b_u - b_l) / b_l`` is flagged undefined when
    ``b_l == 0``.
    """
    s_a, b_u = exact_attacker_best_response(inst, weights, sigma_d, cap)
    s_d, b_l = exact_defender_best_response(inst, weights, attacker, cap=cap)
    if b_l > 0:
        return GapCertificate(b_u, b_l, (b_u - b_l) / b_l, True, s_a, s_d)
    return GapCertificate(b_u, b_l, math.nan, False, s_a, s_d)


# --- exact matrix game -------------------------------------------------------------


@dataclass(frozen=True)
class MatrixGameResult:
    value: float
    defender: MixedStrategy
    attacker: MixedStrategy
    duality_gap: float
    converged: bool


def attacker_pure_strategies(inst: GameInstance) -> list[PureStrategy]:
    real = list(itertools.combinations(range(inst.num_real), min(inst.attacker_budget, inst.num_real)))
    if not inst.num_pseudo or inst.flip_budget == 0:
        return real
    pseudo = list(itertools.combinations(range(inst.num_real, inst.num_channels), inst.flip_budget))
    return [r + p for r in real for p in pseudo]


def defender_pure_strategies(inst: GameInstance) -> list[PureStrategy]:
    return list(itertools.combinations(range(inst.num_real), min(inst.defender_budget, inst.num_real)))


def payoff_matrix(inst: GameInstance, weights, cap: int = 250_000) -> tuple[np.ndarray, list, list]:
    """Full ``(defender x attacker)`` payoff matrix over budget-size pure strategies."""
    d_sets = defender_pure_strategies(inst)
    a_sets = attacker_pure_strategies(inst)
    if len(d_sets) * len(a_sets) > cap:
        raise ResourceError(f"payoff matrix {len(d_sets)}x{len(a_sets)} exceeds the cap {cap}")
    surv = np.array([defense_survival(inst, s) for s in d_sets])
    expo = np.array([exposure(inst, weights, s) for s in a_sets])
    return surv @ expo.T, d_sets, a_sets


def _to_mixed(sets: Sequence[PureStrategy], probs: np.ndarray, tol: float = 1e-12) -> MixedStrategy:
    probs = np.clip(probs, 0.0, None)
    keep = probs > tol
    p = probs[keep] / probs[keep].sum()
    return MixedStrategy(tuple(s for s, k in zip(sets, keep) if k), p)


def _solve_lp(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minimax mixtures for the row player minimizing ``x^T A y``."""
    r, c = A.shape
    # rows: min t s.t. A^T x <= t
    res_d = linprog(
        np.r_[np.zeros(r), 1.0],
        A_ub=np.c_[A.T, -np.ones(c)],
        b_ub=np.zeros(c),
        A_eq=np.r_[np.ones(r), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * r + [(None, None)],
        method="highs",
    )
    # columns: max s s.t. A y >= s
    res_a = linprog(
        np.r_[np.zeros(c), -1.0],
        A_ub=np.c_[-A, np.ones(r)],
        b_ub=np.zeros(r),
        A_eq=np.r_[np.ones(c), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * c + [(None, None)],
        method="highs",
    )
    if res_d.status != 0 or res_a.status != 0:  # pragma: no cover - bounded feasible LPs
        raise RuntimeError("linear program failed: " + res_d.message + " / " + res_a.message)
    x = np.clip(res_d.x[:r], 0, None)
    y = np.clip(res_a.x[:c], 0, None)
    return x / x.sum(), y / y.sum()


def _solve_mwu(A: np.ndarray, tol: float, max_iter: int, eta: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Optimistic multiplicative-weights self-play.

    Returns whichever of the time-averaged and the last-iterate mixtures has
    the smaller duality gap (the last iterate converges linearly when the
    equilibrium is unique, the average always at rate ``1/T``).
    """
    r, c = A.shape
    scale = max(float(np.abs(A).max()), 1e-12)
    B = A / scale
    lx, ly = np.zeros(r), np.zeros(c)
    gx_prev, gy_prev = np.zeros(r), np.zeros(c)
    sx, sy = np.zeros(r), np.zeros(c)
    best = (math.inf, np.full(r, 1.0 / r), np.full(c, 1.0 / c))
    for it in range(1, max_iter + 1):
        ax = -eta * (lx + gx_prev)
        ay = eta * (ly + gy_prev)
        x = np.exp(ax - ax.max())
        x /= x.sum()
        y = np.exp(ay - ay.max())
        y /= y.sum()
        gx_prev, gy_prev = B @ y, x @ B
        lx += gx_prev
        ly += gy_prev
        sx += x
        sy += y
        if it % 100 == 0:
            for cx, cy in ((sx / it, sy / it), (x, y)):
                gap = ((cx @ B).max() - (B @ cy).min()) * scale
                if gap < best[0]:
                    best = (gap, cx.copy(), cy.copy())
            if best[0] <= tol:
                break
    return best[1], best[2]


def matrix_game_value(
    inst: GameInstance,
    weights,
    cap: int = 250_000,
    method: str = "lp",
    tol: float = 1e-6,
    max_iter: int = 200_000,
) -> MatrixGameResult:
    """Exact game value ``tau`` with near-equilibrium mixtures.

    The duality gap ``max_j (x^T A)_j - min_i (A y)_i`` is recomputed from the
    returned mixtures and reported as the convergence certificate.
    """
    A, d_sets, a_sets = payoff_matrix(inst, weights, cap)
    if method == "lp":
        x, y = _solve_lp(A)
    elif method == "mwu":
        x, y = _solve_mwu(A, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    upper = float((x @ A).max())
    lower = float((A @ y).min())
    gap = upper - lower
    return MatrixGameResult(
        value=0.5 * (upper + lower),
        defender=_to_mixed(d_sets, x),
        attacker=_to_mixed(a_sets, y),
        duality_gap=gap,
        converged=gap <= tol,
    )


# --- property oracles ------------------------------------------------------------------


def check_submodular_monotone(fn: Callable[[frozenset], float], ground_size: int, tol: float = 1e-9) -> list[str]:
    """Exhaustively test monotonicity and diminishing returns of a set function.

    Diminishing returns is checked in its equivalent pairwise form
    ``f(A+u) + f(A+w) >= f(A+u+w) + f(A)`` over every ``A`` and ``u, w`` not in ``A``.
    """
    if ground_size > 12:
        raise DomainError("ground set too large for exhaustive checking (max 12)")
    n = ground_size
    vals = np.empty(1 << n)
    for mask in range(1 << n):
        vals[mask] = fn(frozenset(i for i in range(n) if mask >> i & 1))
    masks = np.arange(1 << n)
    out: list[str] = []
    for u in range(n):
        bu = 1 << u
        base = masks[(masks & bu) == 0]
        drop = vals[base] - vals[base | bu]
        for mask in base[drop > tol]:
            out.append(f"monotonicity: adding {u} to mask {mask:#x} decreases value")
        for w in range(u + 1, n):
            bw = 1 << w
            A = masks[(masks & (bu | bw)) == 0]
            excess = vals[A | bu | bw] + vals[A] - vals[A | bu] - vals[A | bw]
            for mask in A[excess > tol]:
                out.append(f"submodularity: pair ({u}, {w}) at mask {mask:#x} has increasing returns")
    return out


def finite_difference_gradient(fn: Callable[[np.ndarray], float], x, h: float = 1e-6, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Central differences ``(F(x + h e_u) - F(x - h e_u)) / 2h``."""
    x = np.asarray(x, dtype=float)
    if np.any(x - h < lo) or np.any(x + h > hi):
        raise DomainError("finite differences need an interior point with margin >= h")
    grad = np.empty_like(x)
    for u in range(x.size):
        e = np.zeros_like(x)
        e[u] = h
        grad[u] = (fn(x + e) - fn(x - e)) / (2 * h)
    return grad
