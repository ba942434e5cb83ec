"""Discounted value computations: pre-decision cost, switch/discard values,
incremental value, the constant-flow infinite-horizon closed form, and budget
feasibility.

Finite horizons are summed through cached discounted prefix arrays; infinite
horizons use exact geometric-series closed forms (truncation appears only in
tests, as an independent oracle).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import (
    ConfigError,
    CostModel,
    DiscountSpec,
    EpochSchedule,
    Horizon,
    PowerLawCurve,
    SampleFlow,
    TrainMode,
    ValueBreakdown,
)

__all__ = [
    "ValueContext",
    "pre_cost_to",
    "value_switch",
    "value_discard",
    "delta_v",
    "setting2_closed_form",
    "budget_horizon",
]


@dataclass(frozen=True)
class ValueContext:
    """Everything needed to price cash flows at time 0."""

    flow: SampleFlow
    horizon: Horizon
    discount: DiscountSpec
    costs: CostModel
    schedule: Optional[EpochSchedule] = None
    tail_tolerance: float = 1e-12

    def __post_init__(self):
        if self.tail_tolerance <= 0:
            raise ConfigError("tail_tolerance must be > 0")
        if not self.horizon.is_finite:
            if self.discount.beta >= 1.0:
                raise ConfigError("infinite horizon requires beta < 1")
            if self.flow.constant_n is None:
                raise ConfigError("infinite horizon requires a constant sample flow")
        else:
            T = self.horizon.T
            flow_max = self.flow.max_t
            if flow_max is not None and flow_max < T:
                raise ConfigError("sample flow does not cover the horizon")
            beta = self.discount.beta
            pows = beta ** np.arange(T + 1, dtype=float)
            n = self.flow.n_array(T).astype(float)
            disc_n = np.concatenate(([0.0], np.cumsum(pows[1:] * n)))
            disc_acq = np.concatenate(
                ([0.0], np.cumsum(pows[1:] * n * self.costs.c_acq_pre))
            )
            for arr in (pows, disc_n, disc_acq):
                arr.setflags(write=False)
            object.__setattr__(self, "_beta_pows", pows)
            object.__setattr__(self, "_disc_n_prefix", disc_n)
            object.__setattr__(self, "_disc_acq_prefix", disc_acq)

    # -- internal helpers -----------------------------------------------------

    def beta_pow(self, t: int) -> float:
        if self.horizon.is_finite:
            return float(self._beta_pows[t])
        return self.discount.beta ** t

    def _check_t(self, t: int) -> None:
        if t < 1:
            raise IndexError(f"time step {t} must be >= 1")
        if self.horizon.is_finite and t > self.horizon.T:
            raise IndexError(f"time step {t} beyond horizon T={self.horizon.T}")

    def discounted_acquisition_to(self, t: int) -> float:
        """Sum over tau <= t of beta**tau * c_acq_pre * n_tau."""
        self._check_t(t)
        if self.horizon.is_finite:
            return float(self._disc_acq_prefix[t])
        beta = self.discount.beta
        n = self.flow.constant_n
        return self.costs.c_acq_pre * n * (beta - beta ** (t + 1)) / (1.0 - beta)

    def discounted_samples_after(self, t: int) -> float:
        """Sum over tau > t of beta**tau * n_tau."""
        self._check_t(t)
        if self.horizon.is_finite:
            return float(self._disc_n_prefix[self.horizon.T] - self._disc_n_prefix[t])
        beta = self.discount.beta
        return self.flow.constant_n * beta ** (t + 1) / (1.0 - beta)

    def discounted_training(self, train_at: Iterable[int]) -> float:
        """Sum over tau in train_at of beta**tau * C_train(tau)."""
        total = 0.0
        for tau in sorted(set(int(t) for t in train_at)):
            self._check_t(tau)
            total += self.beta_pow(tau) * float(
                self.costs.train_cost(self.flow.cumulative(tau))
            )
        return total


def pre_cost_to(ctx: ValueContext, t: int, train_at: Iterable[int] = ()) -> float:
    """Discounted cumulative pre-decision cost through step t, charging
    training at the given epochs (all must be <= t)."""
    train_at = tuple(train_at)
    if any(tau > t for tau in train_at):
        raise ValueError("training epochs must not exceed t")
    return ctx.discounted_acquisition_to(t) + ctx.discounted_training(train_at)


def _post_net(ctx: ValueContext, t: int, gap_at_t: float) -> float:
    """Discounted post-decision net gain of deploying a challenger whose
    expected per-sample gap is gap_at_t."""
    return (gap_at_t - ctx.costs.c_acq_post) * ctx.discounted_samples_after(t)


def value_switch(
    ctx: ValueContext, t: int, gap_at_t: float, train_at: Iterable[int] = ()
) -> ValueBreakdown:
    """Present value at time 0 of switching at step t."""
    ctx._check_t(t)
    pre = pre_cost_to(ctx, t, train_at)
    sw = ctx.beta_pow(t) * ctx.costs.c_s
    return ValueBreakdown(pre_cost=pre, switch_cost=sw, post_net=_post_net(ctx, t, gap_at_t))


def value_discard(ctx: ValueContext, t: int, train_at: Iterable[int] = ()) -> float:
    """Present value of discarding at step t: sunk pre-decision cost only."""
    ctx._check_t(t)
    return -pre_cost_to(ctx, t, train_at)


def delta_v(ctx: ValueContext, t: int, gap_at_t: float) -> float:
    """Incremental value of switching over discarding at step t; pre-decision
    costs cancel, so this is independent of train_at."""
    ctx._check_t(t)
    return -ctx.beta_pow(t) * ctx.costs.c_s + _post_net(ctx, t, gap_at_t)


def setting2_closed_form(ctx: ValueContext, curve: PowerLawCurve, t):
    """Closed-form switching value under constant flow, infinite horizon,
    beta < 1, and per-retrain-constant training folded into the per-sample
    pre-decision cost.  Accepts a scalar or array of steps t >= 1.
    """
    if ctx.horizon.is_finite:
        raise ConfigError("closed form requires an infinite horizon")
    if ctx.costs.train_mode is not TrainMode.PER_RETRAIN_CONSTANT:
        raise ConfigError("closed form requires per-retrain-constant training")
    beta = ctx.discount.beta
    n = ctx.flow.constant_n
    c_pre = ctx.costs.c_acq_pre + ctx.costs.c_train / n
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1):
        raise ValueError("t must be >= 1")
    g = curve.gap_at_samples(n * t_arr)
    bt = beta ** t_arr
    out = (
        -n * c_pre * (beta - beta * bt) / (1.0 - beta)
        - bt * ctx.costs.c_s
        + beta * bt / (1.0 - beta) * n * (g - ctx.costs.c_acq_post)
    )
    return float(out) if np.ndim(t) == 0 else out


def budget_horizon(ctx: ValueContext, budget: float) -> Optional[int]:
    """Largest schedule epoch whose discounted pre-decision plus switching
    cost fits the budget, charging training at every visited epoch.  None if
    even the first epoch is infeasible."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if ctx.schedule is None:
        raise ConfigError("budget check requires a schedule")
    best = None
    visited: list[int] = []
    for t in ctx.schedule:
        visited.append(t)
        spent = pre_cost_to(ctx, t, visited) + ctx.beta_pow(t) * ctx.costs.c_s
        if spent <= budget:
            best = t
    return best
