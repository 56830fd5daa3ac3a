"""Synthetic instances following the experimental recipe (uniform edge probabilities, Bernoulli preferences)."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .model import GameInstance, Known


def generate_instance(
    m: int,
    n: int,
    attacker_budget: int,
    defender_budget: int,
    degree: tuple[int, int] = (1, 5),
    p_range: tuple[float, float] = (0.0, 0.2),
    q_range: tuple[float, float] = (0.0, 0.2),
    theta_prob: float = 0.5,
    disjoint: bool = False,
    seed: int = 0,
) -> tuple[GameInstance, Known]:
    """Random bipartite instance and preference profile.

    Each voter draws a degree uniformly from ``degree`` (one channel in
    disjoint mode) and connects to that many distinct channels; every ``p``
    and ``q`` is i.i.d. uniform on its range and ``theta_v ~ Bernoulli(theta_prob)``.
    """
    lo, hi = (1, 1) if disjoint else degree
    if not 1 <= lo <= hi <= m:
        raise ConfigError(f"degree range {degree} infeasible with {m} channels")
    for name, (a, b) in (("p_range", p_range), ("q_range", q_range)):
        if not 0.0 <= a <= b <= 1.0:
            raise ConfigError(f"{name} {(a, b)} must be a sub-interval of [0, 1]")
    if not 0.0 <= theta_prob <= 1.0:
        raise ConfigError("theta_prob must lie in [0, 1]")
    if not (1 <= attacker_budget <= m and 1 <= defender_budget <= m):
        raise ConfigError("budgets must lie in [1, m]")
    rng = np.random.default_rng(seed)
    edges = []
    for v in range(n):
        d = int(rng.integers(lo, hi + 1))
        chans = np.sort(rng.choice(m, size=d, replace=False))
        ps = rng.uniform(*p_range, size=d)
        qs = rng.uniform(*q_range, size=d)
        edges.extend((int(u), v, float(p), float(q)) for u, p, q in zip(chans, ps, qs))
    theta = (rng.random(n) < theta_prob).astype(int)
    inst = GameInstance.from_edges(m, n, sorted(edges), attacker_budget, defender_budget)
    return inst, Known(theta)
