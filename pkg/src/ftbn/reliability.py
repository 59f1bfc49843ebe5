"""Component failure probabilities under an exponential failure-time model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union


@dataclass(frozen=True)
class Exponential:
    """Constant failure rate, in failures per hour."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"failure rate must be finite and >= 0, got {self.rate!r}")


@dataclass(frozen=True)
class Fixed:
    """Time-independent failure probability."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability must lie in [0, 1], got {self.p!r}")


FailureModel = Union[Exponential, Fixed]


def check_mission_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"mission time must be finite and >= 0, got {t!r}")
    return t


def failure_probability(model: FailureModel, t: float) -> float:
    """Probability that a component is faulty at mission time ``t`` (hours)."""
    t = check_mission_time(t)
    if isinstance(model, Fixed):
        return model.p
    # -expm1 keeps precision for the tiny rate*t products typical of buses
    return min(1.0, max(0.0, -math.expm1(-model.rate * t)))


def probability_table(primaries: Iterable, t: float) -> dict[str, float]:
    """Map each distinct primary id to its failure probability at ``t``."""
    return {pe.id: failure_probability(pe.failure, t) for pe in primaries}


def needs_mission_time(primaries: Iterable) -> bool:
    return any(isinstance(pe.failure, Exponential) for pe in primaries)
