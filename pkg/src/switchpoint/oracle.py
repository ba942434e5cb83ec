"""Benchmark deciders: a full-foresight parametric oracle that knows the true
gap curve, and a path-adaptive oracle that maximizes realized value over the
decision epochs of one sample path.

The parametric oracle pays training cost only at the step it switches at;
the path oracle pays it at every decision epoch up to its stop, matching the
per-step accounting of realized policy runs.  Both value a discard at zero
(walk away before paying anything).
"""
from __future__ import annotations

import math
from typing import Union

import numpy as np

from .core import (
    ConfigError,
    Decision,
    Discard,
    GapPath,
    PowerLawCurve,
    Switch,
    TabulatedCurve,
)
from .value import ValueContext, value_switch

__all__ = ["parametric_oracle", "path_oracle"]

Curve = Union[PowerLawCurve, TabulatedCurve]


def _true_gap(curve: Curve, ctx: ValueContext, t: int) -> float:
    if isinstance(curve, PowerLawCurve):
        return curve.gap_at_samples(ctx.flow.cumulative(t))
    return curve.gap_at_step(t)


def _candidate_steps(ctx: ValueContext) -> np.ndarray:
    """Steps the oracle scans.  Finite horizons scan 1..T exhaustively; the
    infinite-horizon scan stops once the discounted tail cannot change the
    argmax (discount beta < 1 is enforced by the context)."""
    if ctx.horizon.is_finite:
        return np.arange(1, ctx.horizon.T + 1, dtype=np.int64)
    beta = ctx.discount.beta
    # beta**t * (anything bounded) fades geometrically; 60 half-lives of the
    # discount factor is far past any attainable optimum.
    t_max = max(64, int(math.ceil(60.0 / -math.log(beta))))
    return np.arange(1, t_max + 1, dtype=np.int64)


def parametric_oracle(ctx: ValueContext, curve: Curve) -> tuple[Decision, float]:
    """Best single switching step under the true curve, training charged only
    there.  Discard (value 0) when no step has positive value; value ties
    resolve to the earliest step."""
    steps = _candidate_steps(ctx)
    best_t, best_v = None, 0.0
    for t in steps:
        t = int(t)
        v = value_switch(ctx, t, _true_gap(curve, ctx, t), train_at=(t,)).total
        if v > best_v:
            best_t, best_v = t, v
    if best_t is None:
        return Discard(epoch_index=0), 0.0
    return Switch(epoch_index=best_t, challenger_epoch_index=best_t), best_v


def path_oracle(ctx: ValueContext, path: GapPath) -> tuple[Decision, float, int]:
    """Best decision epoch in hindsight on one realized path.

    The value of switching at epoch k discounts the realized per-step gaps of
    that epoch's challenger (the path's future-gap row) over the remaining
    horizon.  Returns (decision, value, stop_epoch); a discard reports epoch 0
    and value 0.
    """
    if path.future_gaps is None:
        raise ConfigError("path oracle requires a future-gap matrix")
    if not ctx.horizon.is_finite:
        raise ConfigError("path oracle requires a finite horizon")
    T = ctx.horizon.T
    if path.horizon_T != T:
        raise ConfigError("path horizon does not match the value context")
    beta = ctx.discount.beta
    pows = beta ** np.arange(1, T + 1, dtype=float)
    n = ctx.flow.n_array(T).astype(float)

    best_k, best_v = None, 0.0
    for est in path.estimates:
        row = path.future_gap_row(est.k)
        post = row[est.t:]  # realized gaps for tau = t_k+1 .. T
        if np.any(np.isnan(post)):
            raise ConfigError(f"future gaps missing after epoch {est.k}")
        gains = float(
            np.sum(pows[est.t:] * (n[est.t:] * post - ctx.costs.c_acq_post * n[est.t:]))
        )
        visited = tuple(e.t for e in path.estimates if e.t <= est.t)
        v = (
            -ctx.discounted_acquisition_to(est.t)
            - ctx.discounted_training(visited)
            - ctx.beta_pow(est.t) * ctx.costs.c_s
            + gains
        )
        if v > best_v:
            best_k, best_v = est.k, v
    if best_k is None:
        return Discard(epoch_index=0), 0.0, 0
    return Switch(epoch_index=best_k, challenger_epoch_index=best_k), best_v, best_k
