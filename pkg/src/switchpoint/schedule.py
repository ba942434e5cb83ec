"""Epoch-schedule construction and the cost/responsiveness trade-off between
uniform and geometric spacing.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, CostModel, EpochSchedule, PowerLawCurve, SampleFlow, ScheduleKind
from .analytic import _setting1_objective

__all__ = [
    "build_uniform",
    "build_geometric",
    "total_training_cost",
    "scaling_exponent_check",
    "responsiveness_loss",
]


def build_uniform(lambda_step: int, T: int) -> EpochSchedule:
    """Equally spaced epochs {L, 2L, ...} up to T."""
    if lambda_step < 1:
        raise ConfigError("lambda_step must be >= 1")
    if lambda_step > T:
        raise ConfigError(f"lambda_step {lambda_step} exceeds horizon {T}: empty schedule")
    epochs = tuple(range(lambda_step, T + 1, lambda_step))
    return EpochSchedule(epochs=epochs, kind=ScheduleKind.UNIFORM)


def build_geometric(first: int, ratio: float, T: int) -> EpochSchedule:
    """Multiplicatively spaced epochs t_k = ceil(first * ratio**(k-1)) up to T,
    rounded up to integers and deduplicated."""
    if first < 1:
        raise ConfigError("first epoch must be >= 1")
    if ratio <= 1.0:
        raise ConfigError("geometric ratio must be > 1")
    if first > T:
        raise ConfigError(f"first epoch {first} exceeds horizon {T}: empty schedule")
    epochs: list[int] = []
    k = 0
    while True:
        t = math.ceil(first * ratio ** k)
        if t > T:
            break
        if not epochs or t > epochs[-1]:
            epochs.append(t)
        k += 1
    return EpochSchedule(epochs=tuple(epochs), kind=ScheduleKind.GEOMETRIC)


def total_training_cost(
    sched: EpochSchedule, costs: CostModel, flow: SampleFlow, t_star: int
) -> tuple[float, int]:
    """Cumulative training cost and retrain count over epochs t_k <= t_star."""
    total = 0.0
    count = 0
    for t in sched:
        if t > t_star:
            break
        total += float(costs.train_cost(flow.cumulative(t)))
        count += 1
    return total, count


def scaling_exponent_check(
    kind: ScheduleKind,
    costs: CostModel,
    flow: SampleFlow,
    t_star_grid: Sequence[int],
    lambda_step: int = 1,
    ratio: float = 2.0,
) -> float:
    """Least-squares slope of log total training cost against log t_star over
    the grid; reported by tests and the CLI, not used in decisions."""
    if len(t_star_grid) < 3:
        raise ValueError("need at least 3 grid points to fit an exponent")
    logs_t, logs_c = [], []
    for t_star in t_star_grid:
        if kind is ScheduleKind.UNIFORM:
            sched = build_uniform(lambda_step, t_star)
        elif kind is ScheduleKind.GEOMETRIC:
            sched = build_geometric(lambda_step, ratio, t_star)
        else:
            raise ValueError("exponent check applies to uniform or geometric schedules")
        cost, _ = total_training_cost(sched, costs, flow, t_star)
        if cost <= 0:
            raise ValueError("training cost must be positive to fit a log-log slope")
        logs_t.append(math.log(t_star))
        logs_c.append(math.log(cost))
    slope, _ = np.polyfit(logs_t, logs_c, 1)
    return float(slope)


def _continuous_argmax(curve: PowerLawCurve, n: int, T: int) -> float:
    """Exact continuous maximizer of (T - t) n G(t) on [1, T] by ternary
    search; the objective is strictly concave in t, so the search converges."""
    lo, hi = 1.0, float(T)
    while hi - lo > 1e-9 * max(1.0, hi):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _setting1_objective(curve, n, T, m1) < _setting1_objective(curve, n, T, m2):
            lo = m1
        else:
            hi = m2
    return 0.5 * (lo + hi)


def responsiveness_loss(
    sched: EpochSchedule,
    curve: PowerLawCurve,
    n: int,
    T: int,
    t_star: Optional[float] = None,
) -> float:
    """Value forgone by switching at the best schedule epoch instead of the
    continuous optimum, in the undiscounted symmetric-cost setting where the
    switch value reduces to (T - t) n G(t) up to constants.

    An explicit t_star is refined to the exact continuous maximizer (the
    asymptotic formulas carry O(1) error at moderate T, which would make the
    loss spuriously negative)."""
    if len(sched) == 0:
        raise ConfigError("schedule is empty")
    t_opt = _continuous_argmax(curve, n, T)
    best_cont = float(_setting1_objective(curve, n, T, t_opt))
    epoch_vals = _setting1_objective(curve, n, T, np.asarray(sched.epochs))
    # clamp float noise when the continuous optimum is itself a schedule epoch
    return max(0.0, best_cont - float(np.max(epoch_vals)))
