"""Top-k selection and projections onto the capped simplex {x : sum(x) <= k, 0 <= x <= 1}."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class CappedSimplex:
    dimension: int
    budget: float

    def __post_init__(self):
        if not 0 < self.budget <= self.dimension:
            raise DomainError(f"budget {self.budget} must lie in (0, {self.dimension}]")


def top_k(scores, k: int) -> tuple[int, ...]:
    """Indices of the ``k`` largest scores, ties to the lowest index, returned sorted."""
    s = np.asarray(scores, dtype=float)
    if not 0 <= k <= s.size:
        raise DomainError(f"k={k} exceeds dimension {s.size}")
    order = np.argsort(-s, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def project_euclidean(y, budget: float) -> np.ndarray:
    """Euclidean projection onto the capped simplex.

    The solution is ``clip(y - tau, 0, 1)`` with ``tau = 0`` when the clipped
    point already meets the budget, otherwise the unique ``tau > 0`` solving
    ``sum(clip(y - tau, 0, 1)) = budget``. ``tau`` is located by scanning the
    sorted breakpoints ``{y_i - 1, y_i}`` of the piecewise-linear mass function.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("projection input must be finite")
    CappedSimplex(y.size, budget)
    x = np.clip(y, 0.0, 1.0)
    if x.sum() <= budget:
        return x

    def mass(tau):
        return np.clip(y - tau, 0.0, 1.0).sum()

    bps = np.unique(np.concatenate([y - 1.0, y]))
    bps = bps[bps > 0.0]
    lo = 0.0
    # mass(0) > budget and mass is nonincreasing in tau, so find the bracket
    for hi in bps:
        if mass(hi) <= budget:
            break
        lo = hi
    else:  # pragma: no cover - mass(max y) == 0 <= budget always breaks
        hi = bps[-1]
    m_lo, m_hi = mass(lo), mass(hi)
    # mass is linear on [lo, hi]
    tau = lo + (m_lo - budget) * (hi - lo) / (m_lo - m_hi)
    return np.clip(y - tau, 0.0, 1.0)


def project_entropic(y, budget: float, mode: str = "closed_form") -> np.ndarray:
    """Entropic (generalized KL) normalization onto the capped simplex.

    ``closed_form`` clips at 1 and rescales by ``exp(-lam)``,
    ``lam = max(0, ln(sum(min(y, 1)) / budget))``. ``exact`` computes the true
    KL projection ``x_i = min(1, s * y_i)`` by repeatedly fixing coordinates
    that saturate and rescaling the rest.
    """
    y = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise DomainError("entropic projection requires strictly positive finite input")
    CappedSimplex(y.size, budget)
    z = np.minimum(y, 1.0)
    if mode == "closed_form":
        lam = max(0.0, float(np.log(z.sum() / budget)))
        return z * np.exp(-lam)
    if mode != "exact":
        raise ValueError(f"unknown entropic mode {mode!r}")
    if z.sum() <= budget:
        return z
    capped = np.zeros(y.size, dtype=bool)
    while True:
        free = ~capped
        scale = (budget - capped.sum()) / y[free].sum()
        newly = free & (y * scale >= 1.0)
        if not newly.any():
            break
        capped |= newly
        if capped.all():
            return np.ones(y.size)
    return np.where(capped, 1.0, np.minimum(y * scale, 1.0))


def project_partition(
    y,
    blocks: Sequence[tuple[Sequence[int], float]],
    geometry: str = "euclidean",
    entropic_mode: str = "closed_form",
) -> np.ndarray:
    """Project each block independently onto its own capped simplex.

    ``blocks`` lists ``(indices, budget)`` pairs that must partition the
    index range. A block with budget 0 is pinned to 0.
    """
    y = np.asarray(y, dtype=float)
    seen = np.zeros(y.size, dtype=int)
    for idx, _ in blocks:
        seen[np.asarray(idx, dtype=int)] += 1
    if np.any(seen > 1):
        raise DomainError("blocks overlap")
    if np.any(seen == 0):
        raise DomainError("blocks do not cover every index")
    out = np.zeros_like(y)
    for idx, budget in blocks:
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0 or budget <= 0:
            continue
        out[idx] = project(y[idx], min(budget, idx.size), geometry, entropic_mode)
    return out


def project(y, budget: float, geometry: str = "euclidean", entropic_mode: str = "closed_form") -> np.ndarray:
    if geometry == "euclidean":
        return project_euclidean(y, budget)
    if geometry == "entropic":
        return project_entropic(y, budget, entropic_mode)
    raise ValueError(f"unknown geometry {geometry!r}")
