"""
Numerical decision rules.

A statistic evaluated along a grid that approaches the boundary (|z| or rho -> 1) is declared finite when the last
two refinement steps each change it by less than a factor FINITE_STEP, infinite when it grows monotonically by at
least INFINITE_GROWTH overall, and inconclusive otherwise.
"""

import math
from enum import Enum
from typing import Sequence

FINITE_STEP = 2.0
INFINITE_GROWTH = 10.0
TREND_STEP = 2.0


class Bounded(Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    INCONCLUSIVE = "inconclusive"


class Trend(Enum):
    DECREASING = "decreasing"
    FLAT = "flat"
    GROWING = "growing"


def _ratio(previous: float, current: float) -> float:
    if previous == 0.0:
        return 1.0 if current == 0.0 else math.inf
    return current / previous


def refinement_decision(values: Sequence[float]) -> Bounded:
    values = [float(v) for v in values]
    if not values or any(math.isnan(v) for v in values):
        return Bounded.INCONCLUSIVE
    if any(math.isinf(v) for v in values):
        return Bounded.INFINITE
    if len(values) >= 2:
        steps = [_ratio(a, b) for a, b in zip(values, values[1:])]
        if all(step >= 1.0 for step in steps) and _ratio(values[0], values[-1]) >= INFINITE_GROWTH:
            return Bounded.INFINITE
    if len(values) < 3:
        return Bounded.INCONCLUSIVE
    last = [_ratio(a, b) for a, b in zip(values[-3:], values[-2:])]
    if all(1.0 / FINITE_STEP < step < FINITE_STEP for step in last):
        return Bounded.FINITE
    return Bounded.INCONCLUSIVE


def trend_decision(values: Sequence[float]) -> Trend:
    """DECREASING when every step shrinks by more than TREND_STEP (or hits zero), GROWING when every step grows
    by more than TREND_STEP, FLAT otherwise."""
    values = [float(v) for v in values]
    if len(values) < 2:
        return Trend.FLAT
    steps = list(zip(values, values[1:]))
    if all(b == 0.0 or (a > 0 and b < a / TREND_STEP) for a, b in steps):
        return Trend.DECREASING
    if all(b > TREND_STEP * a for a, b in steps):
        return Trend.GROWING
    return Trend.FLAT


def spread_of(values: Sequence[float]) -> float:
    """max / min of a positive trace; inf when any entry is zero or not finite."""
    values = [float(v) for v in values]
    if not values or min(values) <= 0.0 or not all(math.isfinite(v) for v in values):
        return math.inf
    return max(values) / min(values)


def grows_by(values: Sequence[float], factor: float = INFINITE_GROWTH) -> bool:
    """Whether the trace never decreases and its last entry is at least factor times its first."""
    values = [float(v) for v in values]
    if len(values) < 2 or any(math.isnan(v) for v in values):
        return False
    return all(b >= a for a, b in zip(values, values[1:])) and _ratio(values[0], values[-1]) >= factor
