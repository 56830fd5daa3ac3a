"""JSON file formats for instances, strategies and solve reports.

All writers emit sorted keys with fixed indentation so identical inputs give
byte-identical files. Floats round-trip exactly through ``repr``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .model import Adversarial, GameInstance, Known, Marginals, MixedStrategy, PreferenceModel, Samples

INSTANCE_FORMAT = "electguard-instance/1"
STRATEGY_FORMAT = "electguard-strategy/1"
REPORT_FORMAT = "electguard-report/1"


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isnan(f) else f
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"


def preference_to_dict(model: PreferenceModel) -> dict:
    if isinstance(model, Known):
        return {"kind": "known", "theta": model.theta.astype(int)}
    if isinstance(model, Marginals):
        return {"kind": "marginals", "probs": model.probs}
    if isinstance(model, Samples):
        return {"kind": "samples", "thetas": model.thetas.astype(int)}
    if isinstance(model, Adversarial):
        return {"kind": "adversarial", "theta_hat": model.theta_hat.astype(int), "radius": model.radius}
    raise TypeError(f"unknown preference model {type(model).__name__}")


def preference_from_dict(d: dict) -> PreferenceModel:
    kind = d.get("kind")
    if kind == "known":
        return Known(d["theta"])
    if kind == "marginals":
        return Marginals(d["probs"])
    if kind == "samples":
        return Samples(d["thetas"])
    if kind == "adversarial":
        return Adversarial(d["theta_hat"], d["radius"])
    raise ConfigError(f"unknown preference kind {kind!r}")


def instance_to_dict(inst: GameInstance, preferences: PreferenceModel | None = None) -> dict:
    if inst.num_pseudo:
        raise ConfigError("extended instances are derived at solve time and are not serialized")
    out = {
        "format": INSTANCE_FORMAT,
        "num_channels": inst.num_channels,
        "num_voters": inst.num_voters,
        "attacker_budget": inst.attacker_budget,
        "defender_budget": inst.defender_budget,
        "edges": [list(e) for e in inst.edges],
    }
    if preferences is not None:
        out["preferences"] = preference_to_dict(preferences)
    return out


def instance_from_dict(d: dict) -> tuple[GameInstance, PreferenceModel | None]:
    if d.get("format") != INSTANCE_FORMAT:
        raise ConfigError(f"not an instance document (format={d.get('format')!r})")
    inst = GameInstance.from_edges(
        d["num_channels"], d["num_voters"], d["edges"], d["attacker_budget"], d["defender_budget"]
    )
    prefs = preference_from_dict(d["preferences"]) if "preferences" in d else None
    return inst, prefs


def strategy_to_dict(sigma: MixedStrategy, side: str) -> dict:
    return {
        "format": STRATEGY_FORMAT,
        "side": side,
        "support": [list(s) for s in sigma.support],
        "weights": sigma.weights,
    }


def strategy_from_dict(d: dict) -> tuple[MixedStrategy, str]:
    if d.get("format") != STRATEGY_FORMAT:
        raise ConfigError(f"not a strategy document (format={d.get('format')!r})")
    return MixedStrategy(tuple(tuple(s) for s in d["support"]), np.asarray(d["weights"], dtype=float)), d["side"]


def marginals_to_dict(trace, final) -> dict:
    """Attacker marginal iterates from the online-gradient solver (the averaged trace and the last iterate)."""
    return {
        "format": STRATEGY_FORMAT,
        "side": "attacker",
        "kind": "marginals",
        "trace": [np.asarray(x) for x in trace],
        "final": np.asarray(final),
    }


def attacker_from_dict(d: dict):
    """Attacker strategy as a :class:`MixedStrategy` or a list of candidate marginal sequences.

    For marginal documents the result is ``[trace, final]`` where ``trace`` is
    a list of vectors (uniform mixture) and ``final`` a single vector.
    """
    if d.get("format") != STRATEGY_FORMAT or d.get("side") != "attacker":
        raise ConfigError("not an attacker strategy document")
    if d.get("kind") == "marginals":
        return [[np.asarray(x, dtype=float) for x in d["trace"]], np.asarray(d["final"], dtype=float)]
    return strategy_from_dict(d)[0]


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def save_instance(path, inst: GameInstance, preferences: PreferenceModel | None = None) -> None:
    write_json(path, instance_to_dict(inst, preferences))


def load_instance(path) -> tuple[GameInstance, PreferenceModel | None]:
    return instance_from_dict(read_json(path))
