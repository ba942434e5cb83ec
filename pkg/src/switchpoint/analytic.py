"""Closed-form and semi-closed-form optimal stopping under constant flow and
a power-law gap curve: the finite-horizon/no-discount and infinite-horizon
asymptotics, the exact discounted threshold rule, and a first-order-condition
root finder used as a cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigError, CostModel, PowerLawCurve, TrainMode

__all__ = [
    "FeasibilityError",
    "AnalyticSummary",
    "c_diff",
    "compute_K",
    "compute_t0",
    "setting1_tstar",
    "setting2_tstar_asymptotic",
    "theorem1_stop",
    "foc_root",
]


class FeasibilityError(ValueError):
    """Switching is infeasible or a formula's preconditions fail."""


@dataclass(frozen=True)
class AnalyticSummary:
    c_diff: float
    K: float
    t0: Optional[float]
    t_star_continuous: Optional[float]
    t_star_integer: Optional[int]
    switch_is_optimal: bool
    value_at_t_star: Optional[float] = None


def c_diff(costs: CostModel, beta: float, n: int) -> float:
    """Effective per-sample hurdle: post-pre cost difference plus the
    annuitized one-time switching cost.  beta = 1 returns the limit."""
    if beta <= 0 or beta > 1:
        raise ValueError("beta must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if costs.train_mode is not TrainMode.PER_RETRAIN_CONSTANT:
        raise ConfigError("c_diff assumes per-retrain-constant training")
    c_pre = costs.c_acq_pre + costs.c_train / n
    base = costs.c_acq_post - c_pre
    if beta == 1.0:
        return base
    return base + costs.c_s * (1.0 - beta) / (beta * n)


def compute_K(curve: PowerLawCurve, n: int, cdiff: float) -> float:
    """Aggregate feasibility constant n**alpha * (g_star - c_diff) / g0."""
    return n ** curve.alpha * (curve.g_star - cdiff) / curve.g0


def compute_t0(K: float, alpha: float) -> float:
    """Lower bound ((alpha+1) K)**(-1/alpha) on the continuous optimizer."""
    if K <= 0:
        raise FeasibilityError("t0 defined only for K > 0")
    return ((alpha + 1.0) * K) ** (-1.0 / alpha)


def _setting1_objective(curve: PowerLawCurve, n: int, T: int, t):
    """The t-dependent part of the undiscounted finite-horizon switch value:
    (T - t) * n * G(t)."""
    t_arr = np.asarray(t, dtype=float)
    return (T - t_arr) * n * curve.gap_at_samples(n * t_arr)


def setting1_tstar(
    curve: PowerLawCurve,
    n: int,
    T: int,
    costs: Optional[CostModel] = None,
) -> tuple[float, int, bool]:
    """Finite-horizon, undiscounted stopping point.

    Returns (continuous asymptotic optimizer, integer maximizer, switch flag).
    The integer maximizer is refined by a local scan around the rounded
    asymptotic value, since the formula is exact only as T grows.
    """
    if curve.g_star <= 0:
        raise FeasibilityError("finite-horizon formula requires g_star > 0")
    if T < 2:
        raise ValueError("T must be >= 2")
    t_cont = (
        (curve.g0 / n ** curve.alpha) * curve.alpha * T / curve.g_star
    ) ** (1.0 / (1.0 + curve.alpha))

    lo = max(1, math.floor(t_cont) - 2)
    hi = min(T - 1, math.ceil(t_cont) + 2)
    if hi - lo < 4 or T <= 8:
        candidates = np.arange(1, T, dtype=np.int64)
    else:
        candidates = np.arange(lo, hi + 1, dtype=np.int64)
    vals = _setting1_objective(curve, n, T, candidates)
    t_int = int(candidates[int(np.argmax(vals))])

    if costs is not None:
        c = costs.c_acq_pre
        v = -T * n * c - costs.c_s + _setting1_objective(curve, n, T, t_int)
    else:
        v = _setting1_objective(curve, n, T, t_int)
    return t_cont, t_int, bool(v >= 0)


def setting2_tstar_asymptotic(
    curve: PowerLawCurve, n: int, beta: float, cdiff: float
) -> float:
    """Continuous optimizer for beta near 1 under an infinite horizon:
    [(g0 / n**alpha) * alpha / ((g_star - c_diff)(1 - beta))] ** (1/(1+alpha)).
    """
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    if curve.g_star <= cdiff:
        raise FeasibilityError("requires g_star > c_diff")
    inner = (
        (curve.g0 / n ** curve.alpha)
        * curve.alpha
        / ((curve.g_star - cdiff) * (1.0 - beta))
    )
    return inner ** (1.0 / (1.0 + curve.alpha))


def foc_root(K: float, alpha: float, beta: float, rel_tol: float = 1e-10) -> float:
    """Unique positive root of f(t) = K t**(alpha+1) - t + alpha/ln(beta).

    f is strictly convex for K > 0 with f(t0) < 0, so the root is bracketed
    by [t0, t_hi] with t_hi doubled until f turns positive, then bisected.
    """
    if K <= 0:
        raise FeasibilityError("no root exists for K <= 0")
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    log_beta = math.log(beta)

    def f(t: float) -> float:
        return K * t ** (alpha + 1.0) - t + alpha / log_beta

    lo = compute_t0(K, alpha)
    hi = max(2.0 * lo, 1.0)
    while f(hi) <= 0:
        hi *= 2.0
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def theorem1_stop(
    curve: PowerLawCurve, n: int, beta: float, costs: CostModel
) -> AnalyticSummary:
    """Exact discounted threshold rule under constant flow and infinite
    horizon: the smallest t with G(t) - beta G(t+1) - (1-beta) c_diff >= 0.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    cdiff = c_diff(costs, beta, n)
    K = compute_K(curve, n, cdiff)
    if K <= 0:
        return AnalyticSummary(
            c_diff=cdiff, K=K, t0=None, t_star_continuous=None,
            t_star_integer=None, switch_is_optimal=False,
        )

    t0 = compute_t0(K, curve.alpha)
    threshold = (1.0 - beta) * cdiff
    t = max(1, math.floor(t0))
    while True:
        g_t = curve.gap_at_samples(n * t)
        g_next = curve.gap_at_samples(n * (t + 1))
        if g_t - beta * g_next - threshold >= 0:
            break
        t += 1

    t_cont = foc_root(K, curve.alpha, beta)
    v_star = _setting2_value(curve, n, beta, costs, t)
    return AnalyticSummary(
        c_diff=cdiff,
        K=K,
        t0=t0,
        t_star_continuous=t_cont,
        t_star_integer=t,
        switch_is_optimal=bool(v_star >= 0.0),
        value_at_t_star=v_star,
    )


def _setting2_value(
    curve: PowerLawCurve, n: int, beta: float, costs: CostModel, t
):
    """Infinite-horizon discounted switch value (direct-summation convention:
    pre-decision cash flows start at tau = 1)."""
    c_pre = costs.c_acq_pre + costs.c_train / n
    t_arr = np.asarray(t, dtype=float)
    g = curve.gap_at_samples(n * t_arr)
    bt = beta ** t_arr
    out = (
        -n * c_pre * (beta - beta * bt) / (1.0 - beta)
        - bt * costs.c_s
        + beta * bt / (1.0 - beta) * n * (g - costs.c_acq_post)
    )
    return float(out) if np.ndim(t) == 0 else out
