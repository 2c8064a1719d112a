"""Analytic cost model for reuse-versus-learning amortization.

Handling one task costs retrieval plus execution, and a learning episode
additionally pays planning, collection, training, and storage. The helpers
here quantify when that one-time investment is repaid by later reuse, and
how much a delayed-update strategy loses to quasi-real-time updating.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import SchemaError

_COST_FIELDS = ("c_retrieve", "c_plan", "c_collect", "c_train", "c_store", "c_exec", "c_delay")


@dataclass(frozen=True)
class CostProfile:
    c_retrieve: float = 0.0
    c_plan: float = 0.0
    c_collect: float = 0.0
    c_train: float = 0.0
    c_store: float = 0.0
    c_exec: float = 0.0
    c_delay: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be nonnegative")


@dataclass(frozen=True)
class ReuseBenefit:
    delta_c: float
    investment: float
    b_reuse: float
    b_net: float


@dataclass(frozen=True)
class DelayComparison:
    delayed_total: float
    quasi_total: float


def learning_overhead(profile: CostProfile) -> float:
    """Extra cost a learning episode pays on top of retrieve + execute."""
    return profile.c_plan + profile.c_collect + profile.c_train + profile.c_store


def single_task_cost(profile: CostProfile, z: bool) -> float:
    """Cost of one task: retrieve + execute, plus the learning overhead iff z."""
    base = profile.c_retrieve + profile.c_exec
    return base + learning_overhead(profile) if z else base


def expected_task_cost(profile: CostProfile, p: float) -> float:
    """Expected cost when the task is covered with probability ``p``.

    Affine and non-increasing in p: better coverage never costs more.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return profile.c_retrieve + profile.c_exec + (1.0 - p) * learning_overhead(profile)


def reuse_benefit(profile: CostProfile, rho: float, k: int) -> ReuseBenefit:
    """Net long-term benefit of consolidating one learned method.

    ``rho`` is the method's future reuse probability and ``k`` the number of
    future occasions. Each successful reuse saves planning + collection +
    training; the one-time investment additionally includes storage.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    if k < 0:
        raise ValueError("k must be nonnegative")
    delta_c = profile.c_plan + profile.c_collect + profile.c_train
    investment = delta_c + profile.c_store
    b_reuse = rho * k * delta_c
    return ReuseBenefit(
        delta_c=delta_c,
        investment=investment,
        b_reuse=b_reuse,
        b_net=b_reuse - investment,
    )


def benefit_condition_holds(profile: CostProfile, rho: float, k: int) -> bool:
    """True when expected reuse savings strictly exceed the investment."""
    result = reuse_benefit(profile, rho, k)
    return result.b_reuse > result.investment


def delay_comparison(profile: CostProfile, c_delay_quasi: float) -> DelayComparison:
    """Total cost under fully delayed versus quasi-real-time updating.

    The quasi strategy replaces the delay term with the (smaller)
    ``c_delay_quasi``, so its total never exceeds the delayed one.
    """
    if c_delay_quasi < 0:
        raise ValueError("c_delay_quasi must be nonnegative")
    if c_delay_quasi > profile.c_delay:
        raise ValueError("c_delay_quasi cannot exceed the profile's c_delay")
    common = (
        profile.c_retrieve
        + profile.c_exec
        + profile.c_plan
        + profile.c_collect
        + profile.c_train
    )
    return DelayComparison(
        delayed_total=common + profile.c_delay,
        quasi_total=common + c_delay_quasi,
    )


def profile_to_dict(profile: CostProfile) -> dict:
    return {name: getattr(profile, name) for name in _COST_FIELDS}


def profile_from_dict(doc: dict) -> CostProfile:
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected a JSON object")
    values = {}
    for name in _COST_FIELDS:
        value = doc.get(name, 0.0)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(name, "expected a number")
        if value < 0:
            raise SchemaError(name, "must be nonnegative")
        values[name] = float(value)
    return CostProfile(**values)


def load_profile(path: str | Path) -> CostProfile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"not valid JSON: {exc}") from exc
    return profile_from_dict(doc)
