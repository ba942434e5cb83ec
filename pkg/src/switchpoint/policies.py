"""Sequential stopping policies over observed gap-estimate paths.

Four rules are provided:

* one-shot evaluation (OSE): a single accept/reject test at a configured epoch;
* global stopping with estimates (GSE): confidence bands around the switch
  value, acting only when a band clears zero;
* a modified GSE that may deploy the previous epoch's challenger;
* local stopping with extrapolation (LSE / LSEc): compare the value of acting
  now against optimistic slope-based projections of acting later.

Each policy is driven through `policy_step`, which enforces epoch ordering and
irreversibility and records per-epoch diagnostics for tracing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .core import (
    ConfigError,
    Continue,
    Decision,
    Discard,
    GapEstimate,
    PolicyConfig,
    Switch,
)
from .value import ValueContext, delta_v, pre_cost_to, value_switch

__all__ = [
    "PolicyKind",
    "PolicyState",
    "StepRecord",
    "SequencingError",
    "ose_decide",
    "gse_step",
    "gse_modified_step",
    "lse_slope",
    "lsec_slope",
    "lse_step",
    "policy_step",
]


class PolicyKind(Enum):
    OSE = "ose"
    GSE = "gse"
    GSE_MODIFIED = "gse_modified"
    LSE = "lse"
    LSEC = "lsec"


class SequencingError(RuntimeError):
    """Estimates fed out of epoch order, or a step after a horizon overrun."""


@dataclass
class PolicyState:
    """Mutable per-run policy state: the estimates seen so far and, once a
    non-Continue decision is made, that decision (irreversible)."""

    kind: PolicyKind
    config: PolicyConfig
    history: list[GapEstimate] = field(default_factory=list)
    stopped: Optional[Decision] = None

    @property
    def current_epoch(self) -> int:
        return len(self.history)

    def _accept(self, est: GapEstimate) -> None:
        if est.k != len(self.history) + 1:
            raise SequencingError(
                f"expected epoch {len(self.history) + 1}, got {est.k}"
            )
        self.history.append(est)


@dataclass(frozen=True)
class StepRecord:
    """Per-epoch diagnostics emitted alongside the decision.

    v_lb / v_hat / v_ub are the policy's own lower / point / upper value
    figures for this epoch; policies without a band report NaN there.
    """

    k: int
    t: int
    n_cum: int
    g_hat: float
    v_lb: float
    v_hat: float
    v_ub: float
    decision: Decision


def _delta_width(config: PolicyConfig, n_cum: int) -> float:
    """Confidence half-width gamma / sqrt(rho * N)."""
    return config.gamma / math.sqrt(config.rho * n_cum)


def _schedule_epochs(ctx: ValueContext) -> tuple[int, ...]:
    if ctx.schedule is None:
        raise ConfigError("sequential policies require a schedule on the context")
    return ctx.schedule.epochs


# --- OSE ---------------------------------------------------------------------

def ose_decide(ctx: ValueContext, est: GapEstimate) -> Decision:
    """Accept/reject at a single epoch: switch iff the incremental value of
    deploying now, at the observed gap, is strictly positive."""
    dv = delta_v(ctx, est.t, est.g_hat)
    if dv > 0:
        return Switch(epoch_index=est.k, challenger_epoch_index=est.k)
    return Discard(epoch_index=est.k)


# --- GSE ---------------------------------------------------------------------

def _gse_bands(
    ctx: ValueContext, est: GapEstimate, delta: float, visited: Sequence[int]
) -> tuple[float, float, float]:
    v_lb = value_switch(ctx, est.t, est.g_hat - delta, train_at=visited).total
    v_hat = value_switch(ctx, est.t, est.g_hat, train_at=visited).total
    v_ub = value_switch(ctx, est.t, est.g_hat + delta, train_at=visited).total
    return v_lb, v_hat, v_ub


def gse_step(ctx: ValueContext, state: PolicyState, est: GapEstimate) -> StepRecord:
    """One global-stopping step: act when a confidence band clears zero.

    Pessimistic value positive -> switch now; optimistic value negative -> the
    run cannot pay off, so take the better of a pessimistic switch and a
    discard.  Otherwise continue, except at the final epoch where the stop
    branch is forced so the run always terminates.
    """
    return _gse_common(ctx, state, est, consider_previous=False)


def gse_modified_step(
    ctx: ValueContext, state: PolicyState, est: GapEstimate
) -> StepRecord:
    """GSE whose stop branch may deploy the previous epoch's challenger when
    its confidence-adjusted gap beats the current one.  Ties keep the current
    challenger (trained on more data at the same bound)."""
    return _gse_common(ctx, state, est, consider_previous=True)


def _gse_common(
    ctx: ValueContext, state: PolicyState, est: GapEstimate, consider_previous: bool
) -> StepRecord:
    state._accept(est)
    visited = [e.t for e in state.history]
    delta = _delta_width(state.config, est.n_cum)
    v_lb, v_hat, v_ub = _gse_bands(ctx, est, delta, visited)
    last = est.k == len(_schedule_epochs(ctx))

    decision: Decision
    if v_lb > 0:
        decision = Switch(epoch_index=est.k, challenger_epoch_index=est.k)
    elif v_ub < 0 or last:
        decision = _gse_stop_branch(ctx, state, est, delta, consider_previous)
    else:
        decision = Continue()
    if not isinstance(decision, Continue):
        state.stopped = decision
    return StepRecord(
        k=est.k, t=est.t, n_cum=est.n_cum, g_hat=est.g_hat,
        v_lb=v_lb, v_hat=v_hat, v_ub=v_ub, decision=decision,
    )


def _gse_stop_branch(
    ctx: ValueContext,
    state: PolicyState,
    est: GapEstimate,
    delta: float,
    consider_previous: bool,
) -> Decision:
    """Pessimistic incremental value of switching now, maximized over the
    current challenger and (in the modified variant) the previous one, both
    deployed at the current step."""
    candidates: list[tuple[float, int]] = [
        (delta_v(ctx, est.t, est.g_hat - delta), est.k)
    ]
    if consider_previous and est.k > 1:
        prev = state.history[-2]
        delta_prev = _delta_width(state.config, prev.n_cum)
        candidates.append(
            (delta_v(ctx, est.t, prev.g_hat - delta_prev), est.k - 1)
        )
    best_dv, best_k = candidates[0]
    for dv, kk in candidates[1:]:
        if dv > best_dv:
            best_dv, best_k = dv, kk
    if best_dv > 0:
        return Switch(epoch_index=est.k, challenger_epoch_index=best_k)
    return Discard(epoch_index=est.k)


# --- LSE / LSEc slope estimators ---------------------------------------------

def lse_slope(window: Sequence[tuple[int, float]], rho: float) -> float:
    """Nonnegative least-squares slope of gap estimates against training-set
    size (1 - rho) * N over a window of (N, g_hat) pairs.

    Strictly decreasing windows are first flattened to their mean (gap curves
    cannot trend down in expectation), which yields slope zero.
    """
    if len(window) < 2:
        raise ValueError("slope window needs at least 2 points")
    gaps = np.array([g for _, g in window], dtype=float)
    sizes = (1.0 - rho) * np.array([n for n, _ in window], dtype=float)
    if np.any(np.diff(sizes) <= 0):
        raise ConfigError("training-set sizes must be strictly increasing")
    if np.all(np.diff(gaps) < 0):
        return 0.0
    # centered least squares: numerically stable at large sample counts
    x = sizes - sizes.mean()
    slope = float(np.dot(x, gaps - gaps.mean()) / np.dot(x, x))
    return max(slope, 0.0)


def lsec_slope(
    prev: tuple[int, float], curr: tuple[int, float], rho: float, delta_k: float
) -> float:
    """Uncertainty-widened finite-difference slope over the last two epochs.

    A negative raw difference is replaced by the pure-noise slope
    2 delta_k / run; otherwise the difference is widened by delta_k on each
    side.  With delta_k = 0 this is the plain finite difference.
    """
    run = (1.0 - rho) * (curr[0] - prev[0])
    if run <= 0:
        raise ConfigError("degenerate schedule: no training-size increase between epochs")
    rise = curr[1] - prev[1]
    if rise < 0:
        return 2.0 * delta_k / run
    return (rise + 2.0 * delta_k) / run


# --- LSE / LSEc step ---------------------------------------------------------

def lse_step(
    ctx: ValueContext,
    state: PolicyState,
    est: GapEstimate,
    use_confidence_slope: bool = False,
) -> StepRecord:
    """One local-stopping step: stop when neither waiting for any later epoch
    (valued at an optimistic slope-based projection of the gap) nor the
    discard-now value beats acting at the current epoch.

    Epochs before the smoothing window fills always continue.  At the final
    epoch the accept/reject test is forced.
    """
    state._accept(est)
    epochs = _schedule_epochs(ctx)
    visited = [e.t for e in state.history]
    k, K = est.k, len(epochs)
    w = 2 if use_confidence_slope else state.config.w
    last = k == K

    v_hat = value_switch(ctx, est.t, est.g_hat, train_at=visited).total
    v_discard = -pre_cost_to(ctx, est.t, visited)

    if k < w and not last:
        rec = Continue()
        return StepRecord(
            k=k, t=est.t, n_cum=est.n_cum, g_hat=est.g_hat,
            v_lb=v_discard, v_hat=v_hat, v_ub=math.nan, decision=rec,
        )

    best_future = -math.inf
    if not last and k >= w:
        if use_confidence_slope:
            prev = state.history[-2]
            delta = _delta_width(state.config, est.n_cum)
            s_hat = lsec_slope(
                (prev.n_cum, prev.g_hat), (est.n_cum, est.g_hat),
                state.config.rho, delta,
            )
        else:
            window = [(e.n_cum, e.g_hat) for e in state.history[-w:]]
            s_hat = lse_slope(window, state.config.rho)
        for t_future in epochs[k:]:
            n_future = ctx.flow.cumulative(t_future)
            g_proj = est.g_hat + (1.0 - state.config.rho) * (n_future - est.n_cum) * s_hat
            train_future = visited + [t for t in epochs[k:] if t <= t_future]
            v_proj = value_switch(ctx, t_future, g_proj, train_at=train_future).total
            best_future = max(best_future, v_proj)

    decision: Decision
    if last or max(v_hat, v_discard) >= best_future:
        dv = delta_v(ctx, est.t, est.g_hat)
        if dv > 0:
            decision = Switch(epoch_index=k, challenger_epoch_index=k)
        else:
            decision = Discard(epoch_index=k)
    else:
        decision = Continue()
    if not isinstance(decision, Continue):
        state.stopped = decision
    return StepRecord(
        k=k, t=est.t, n_cum=est.n_cum, g_hat=est.g_hat,
        v_lb=v_discard, v_hat=v_hat, v_ub=best_future, decision=decision,
    )


# --- Uniform driver ----------------------------------------------------------

def policy_step(ctx: ValueContext, state: PolicyState, est: GapEstimate) -> StepRecord:
    """Advance any policy by one epoch; no-op once a decision was made."""
    if state.stopped is not None:
        return StepRecord(
            k=est.k, t=est.t, n_cum=est.n_cum, g_hat=est.g_hat,
            v_lb=math.nan, v_hat=math.nan, v_ub=math.nan, decision=state.stopped,
        )
    if state.kind is PolicyKind.OSE:
        return _ose_step(ctx, state, est)
    if state.kind is PolicyKind.GSE:
        return gse_step(ctx, state, est)
    if state.kind is PolicyKind.GSE_MODIFIED:
        return gse_modified_step(ctx, state, est)
    if state.kind is PolicyKind.LSE:
        return lse_step(ctx, state, est, use_confidence_slope=False)
    if state.kind is PolicyKind.LSEC:
        return lse_step(ctx, state, est, use_confidence_slope=True)
    raise ConfigError(f"unknown policy kind {state.kind}")


def _ose_step(ctx: ValueContext, state: PolicyState, est: GapEstimate) -> StepRecord:
    """Sequential wrapper around the one-shot test: continue until the
    configured evaluation epoch (last epoch by default), then decide."""
    state._accept(est)
    K = len(_schedule_epochs(ctx))
    eval_k = state.config.ose_epoch_index if state.config.ose_epoch_index is not None else K
    if not (1 <= eval_k <= K):
        raise ConfigError(f"ose_epoch_index {eval_k} outside schedule of size {K}")
    decision: Decision
    if est.k == eval_k:
        decision = ose_decide(ctx, est)
        state.stopped = decision
        dv = delta_v(ctx, est.t, est.g_hat)
    else:
        decision = Continue()
        dv = math.nan
    return StepRecord(
        k=est.k, t=est.t, n_cum=est.n_cum, g_hat=est.g_hat,
        v_lb=math.nan, v_hat=dv, v_ub=math.nan, decision=decision,
    )
