"""Time-varying cost weights ``(q_t, r_t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..control.costs import QuadraticCost

__all__ = ["SCHEDULES", "WeightSchedule", "weights_at", "cost_from_schedule"]

SCHEDULES = ("sinusoidal", "sinusoidal_shifted", "step", "constant")
_HALF_LOG2 = math.log(2.0) / 2.0
# Step table, one row per fifth of the horizon.
_STEPS = ((_HALF_LOG2, 1.0), (1.0, 1.0), (_HALF_LOG2, _HALF_LOG2), (1.0, _HALF_LOG2),
          (_HALF_LOG2, 1.0))


@dataclass(frozen=True)
class WeightSchedule:
    """``sinusoidal``: ``q = sin(t / (10 pi))``, ``r = sin(t / (20 pi))`` (signs
    included, so some rounds are nonconvex); ``sinusoidal_shifted``: the same
    mapped to ``(1 + sin) / 2``; ``step``: five constant segments; ``constant``:
    fixed ``(q, r)``."""

    kind: str = "sinusoidal"
    q: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}; expected one of {SCHEDULES}")


def weights_at(schedule: WeightSchedule, t: int, T: int):
    if not 0 <= t <= T:
        raise ValueError(f"t = {t} outside [0, {T}]")
    if schedule.kind == "sinusoidal":
        return math.sin(t / (10.0 * math.pi)), math.sin(t / (20.0 * math.pi))
    if schedule.kind == "sinusoidal_shifted":
        return ((1.0 + math.sin(t / (10.0 * math.pi))) / 2.0,
                (1.0 + math.sin(t / (20.0 * math.pi))) / 2.0)
    if schedule.kind == "step":
        # Segment k covers k T / 5 < t <= (k + 1) T / 5; integer test avoids float edges.
        k = next(k for k in range(5) if 5 * t <= (k + 1) * T)
        return _STEPS[k]
    return float(schedule.q), float(schedule.r)


def cost_from_schedule(schedule: WeightSchedule, T: int) -> QuadraticCost:
    qr = np.array([weights_at(schedule, t, T) for t in range(T + 1)])
    return QuadraticCost(qr[:, 0], qr[:, 1])
