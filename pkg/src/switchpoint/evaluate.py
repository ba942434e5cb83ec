"""Run policies over sample paths with per-step cash-flow accounting, compare
against the path oracle, aggregate seeded ensembles, and sweep cost grids.

The cash flow at step t is one of four cases: before the decision the
incumbent pays acquisition (and training at decision epochs); the switching
step additionally pays the one-time switching cost; after a switch the
deployed challenger's realized per-step gap accrues net of post-decision
acquisition; after a discard nothing flows.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ConfigError,
    Continue,
    CostModel,
    Discard,
    DiscountSpec,
    GapPath,
    Horizon,
    PolicyConfig,
    RunResult,
    Switch,
)
from .env import EnvSpec, synth_path
from .oracle import path_oracle
from .policies import PolicyKind, PolicyState, StepRecord, policy_step
from .value import ValueContext

__all__ = [
    "run_policy",
    "run_policy_traced",
    "regret",
    "PolicyStats",
    "OracleStats",
    "ensemble",
    "SweepSpec",
    "SWEEP_COLUMNS",
    "sweep",
    "regret_scaling",
]


def _train_steps(kind: PolicyKind, ctx: ValueContext, stop_t: int, stop_k: int) -> list[int]:
    """Steps at which training cost is charged: every visited epoch for the
    sequential policies, only the evaluation epoch for the one-shot one."""
    epochs = ctx.schedule.epochs
    if kind is PolicyKind.OSE:
        return [epochs[stop_k - 1]]
    return [t for t in epochs if t <= stop_t]


def run_policy_traced(
    ctx: ValueContext,
    path: GapPath,
    kind: PolicyKind,
    config: PolicyConfig,
) -> tuple[RunResult, list[StepRecord]]:
    """Drive one policy over one path and account its realized value."""
    if ctx.schedule is None:
        raise ConfigError("run_policy requires a schedule on the context")
    if not ctx.horizon.is_finite:
        raise ConfigError("run_policy requires a finite horizon")
    if len(path) != len(ctx.schedule):
        raise ConfigError("path does not cover the schedule")
    T = ctx.horizon.T

    state = PolicyState(kind=kind, config=config)
    trace: list[StepRecord] = []
    decision = None
    for est in path.estimates:
        rec = policy_step(ctx, state, est)
        trace.append(rec)
        if not isinstance(rec.decision, Continue):
            decision = rec.decision
            break
    if decision is None:
        raise RuntimeError("policy failed to terminate at the final epoch")

    stop_k = decision.epoch_index
    stop_t = ctx.schedule.step_of(stop_k)
    n = ctx.flow.n_array(T).astype(float)
    pi = np.zeros(T)
    pi[:stop_t] = -ctx.costs.c_acq_pre * n[:stop_t]
    for tau in _train_steps(kind, ctx, stop_t, stop_k):
        pi[tau - 1] -= float(ctx.costs.train_cost(ctx.flow.cumulative(tau)))
    if isinstance(decision, Switch):
        pi[stop_t - 1] -= ctx.costs.c_s
        row = path.future_gap_row(decision.challenger_epoch_index)
        post = row[stop_t:]
        if np.any(np.isnan(post)):
            raise ConfigError("future gaps missing for the deployed challenger")
        pi[stop_t:] = n[stop_t:] * post - ctx.costs.c_acq_post * n[stop_t:]

    pows = ctx.discount.beta ** np.arange(1, T + 1, dtype=float)
    total = float(np.sum(pows * pi))
    _, oracle_value, _ = path_oracle(ctx, path)
    result = RunResult(
        decision=decision,
        pi_stream=pi,
        total_value=total,
        oracle_value=oracle_value,
        regret=oracle_value - total,
        stop_epoch=stop_k,
    )
    return result, trace


def run_policy(
    ctx: ValueContext, path: GapPath, kind: PolicyKind, config: PolicyConfig
) -> RunResult:
    result, _ = run_policy_traced(ctx, path, kind, config)
    return result


def regret(result: RunResult, oracle_value: float) -> float:
    """Shortfall of the realized value against the oracle on the same path."""
    return oracle_value - result.total_value


# --- Ensembles ---------------------------------------------------------------

@dataclass(frozen=True)
class PolicyStats:
    policy: PolicyKind
    seeds: int
    mean_value: float
    sd_value: float
    value_quantiles: tuple[float, float, float]  # 5% / 50% / 95%
    mean_regret: float
    mean_stop_epoch: float  # over switch runs only; NaN if none
    mode_stop_epoch: int
    switch_freq: float
    discard_freq: float


@dataclass(frozen=True)
class OracleStats:
    seeds: int
    mean_value: float
    sd_value: float
    mode_stop_epoch: int


def _mode(values: Sequence[int]) -> int:
    """Most frequent value; ties resolve to the smallest."""
    counts = Counter(values)
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


def _summarize(kind: PolicyKind, results: Sequence[RunResult]) -> PolicyStats:
    vals = np.array([r.total_value for r in results])
    regs = np.array([r.regret for r in results])
    stops = [r.stop_epoch for r in results]
    switch_stops = [r.stop_epoch for r in results if isinstance(r.decision, Switch)]
    q5, q50, q95 = np.quantile(vals, [0.05, 0.5, 0.95])
    return PolicyStats(
        policy=kind,
        seeds=len(results),
        mean_value=float(vals.mean()),
        sd_value=float(vals.std(ddof=1)) if len(results) > 1 else 0.0,
        value_quantiles=(float(q5), float(q50), float(q95)),
        mean_regret=float(regs.mean()),
        mean_stop_epoch=float(np.mean(switch_stops)) if switch_stops else math.nan,
        mode_stop_epoch=_mode(stops),
        switch_freq=sum(isinstance(r.decision, Switch) for r in results) / len(results),
        discard_freq=sum(isinstance(r.decision, Discard) for r in results) / len(results),
    )


def ensemble(
    ctx: ValueContext,
    env: EnvSpec,
    policies: Sequence[PolicyKind],
    config: PolicyConfig,
    seeds: int,
    base_seed: int,
) -> tuple[list[PolicyStats], OracleStats]:
    """Run every policy over the same `seeds` sample paths (seed i uses
    base_seed + i) and aggregate values, stop epochs, and decision mix."""
    if seeds < 1:
        raise ConfigError("need at least one seed")
    per_policy: dict[PolicyKind, list[RunResult]] = {p: [] for p in policies}
    oracle_vals: list[float] = []
    oracle_stops: list[int] = []
    for i in range(seeds):
        path = synth_path(env.with_seed(base_seed + i))
        _, o_val, o_stop = path_oracle(ctx, path)
        oracle_vals.append(o_val)
        oracle_stops.append(o_stop)
        for p in policies:
            per_policy[p].append(run_policy(ctx, path, p, config))
    stats = [_summarize(p, per_policy[p]) for p in policies]
    ovals = np.array(oracle_vals)
    ostats = OracleStats(
        seeds=seeds,
        mean_value=float(ovals.mean()),
        sd_value=float(ovals.std(ddof=1)) if seeds > 1 else 0.0,
        mode_stop_epoch=_mode(oracle_stops),
    )
    return stats, ostats


# --- Sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Grid of cost/discount cells crossed with policies; the acquisition grid
    sets the pre- and post-decision per-sample costs symmetrically."""

    env: EnvSpec
    c_acq_grid: tuple[float, ...]
    c_train_grid: tuple[float, ...]
    beta_grid: tuple[float, ...]
    c_s_grid: tuple[float, ...]
    policies: tuple[PolicyKind, ...]
    policy_config: PolicyConfig
    seeds: int
    base_seed: int = 0
    max_work: int = 200_000_000  # cells * seeds * T guard

    def __post_init__(self):
        for name in ("c_acq_grid", "c_train_grid", "beta_grid", "c_s_grid"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be nonempty")
        if not self.policies:
            raise ConfigError("policy list must be nonempty")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        work = self.n_cells * self.seeds * self.env.horizon_T
        if work > self.max_work:
            raise ConfigError(
                f"sweep too large: cells*seeds*T = {work} exceeds cap {self.max_work}"
            )

    @property
    def n_cells(self) -> int:
        return (
            len(self.c_acq_grid) * len(self.c_train_grid)
            * len(self.beta_grid) * len(self.c_s_grid)
        )

    def cells(self) -> list[tuple[int, float, float, float, float]]:
        out = []
        cid = 0
        for c_acq in self.c_acq_grid:
            for c_train in self.c_train_grid:
                for beta in self.beta_grid:
                    for c_s in self.c_s_grid:
                        out.append((cid, c_acq, c_train, beta, c_s))
                        cid += 1
        return out


SWEEP_COLUMNS = (
    "cell_id", "c_acq", "c_train", "beta", "c_s", "policy",
    "mean_value", "sd_value", "mean_stop_epoch", "mode_stop_epoch",
    "switch_freq", "discard_freq", "oracle_mean_value",
    "oracle_mode_stop_epoch", "seeds",
)


def _cell_context(spec: SweepSpec, c_acq: float, c_train: float, beta: float, c_s: float) -> ValueContext:
    costs = CostModel(
        c_acq_pre=c_acq, c_acq_post=c_acq, c_train=c_train, c_s=c_s,
    )
    return ValueContext(
        flow=spec.env.flow,
        horizon=Horizon.finite(spec.env.horizon_T),
        discount=DiscountSpec(beta=beta),
        costs=costs,
        schedule=spec.env.schedule,
    )


def _run_cell(args: tuple[SweepSpec, int, float, float, float, float]) -> list[dict]:
    spec, cid, c_acq, c_train, beta, c_s = args
    ctx = _cell_context(spec, c_acq, c_train, beta, c_s)
    stats, ostats = ensemble(
        ctx, spec.env, spec.policies, spec.policy_config, spec.seeds, spec.base_seed
    )
    rows = []
    for st in stats:
        rows.append({
            "cell_id": cid,
            "c_acq": c_acq,
            "c_train": c_train,
            "beta": beta,
            "c_s": c_s,
            "policy": st.policy.value,
            "mean_value": st.mean_value,
            "sd_value": st.sd_value,
            "mean_stop_epoch": st.mean_stop_epoch,
            "mode_stop_epoch": st.mode_stop_epoch,
            "switch_freq": st.switch_freq,
            "discard_freq": st.discard_freq,
            "oracle_mean_value": ostats.mean_value,
            "oracle_mode_stop_epoch": ostats.mode_stop_epoch,
            "seeds": st.seeds,
        })
    return rows


def sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """One output row per (cell, policy).  Paths are shared across policies
    inside a cell; output is independent of the worker count because rows are
    assembled in cell order regardless of completion order."""
    tasks = [(spec, cid, a, tr, b, s) for cid, a, tr, b, s in spec.cells()]
    if workers <= 1 or len(tasks) == 1:
        chunks = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, tasks))
    rows: list[dict] = []
    for chunk in chunks:
        rows.extend(chunk)
    return rows


# --- Regret scaling ----------------------------------------------------------

def _regret_task(args) -> tuple[int, float]:
    env, ctx, kind, config, seeds, base_seed = args
    total = 0.0
    for i in range(seeds):
        path = synth_path(env.with_seed(base_seed + i))
        total += run_policy(ctx, path, kind, config).regret
    return ctx.horizon.T, total / seeds


def regret_scaling(
    envs: Sequence[tuple[EnvSpec, ValueContext]],
    kind: PolicyKind,
    configs: Sequence[PolicyConfig],
    seeds: int,
    base_seed: int = 0,
    workers: int = 1,
) -> tuple[list[tuple[int, float]], float]:
    """Mean regret per horizon plus the fitted log-log slope of regret vs T.

    `configs` allows per-horizon tuning (the one-shot policy's evaluation
    epoch moves with T); pass the same config repeated otherwise.
    """
    if len(envs) != len(configs):
        raise ConfigError("need one policy config per horizon")
    if len(envs) < 3:
        raise ConfigError("need at least 3 horizons to fit a slope")
    tasks = [
        (env, ctx, kind, cfg, seeds, base_seed)
        for (env, ctx), cfg in zip(envs, configs)
    ]
    if workers <= 1:
        points = [_regret_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_regret_task, tasks))
    if any(r <= 0 for _, r in points):
        raise ConfigError("mean regret must be positive to fit a log-log slope")
    logs_T = np.log([T for T, _ in points])
    logs_R = np.log([r for _, r in points])
    slope = float(np.polyfit(logs_T, logs_R, 1)[0])
    return points, slope
