"""Command-line front end.

Subcommands:

* ``analytic``        closed-form stopping summary for the configured instance
* ``simulate``        one policy, one path, per-epoch trace CSV
* ``sweep``           cost-grid ensemble sweep, flat CSV
* ``regret-scaling``  mean regret across horizons plus fitted log-log slope
* ``replay-validate`` parse and validate an external path file

All behavior is driven by a TOML config file (see the README for the
grammar); ``--seed`` overrides the configured base seed.  Output files are
byte-identical across re-runs and worker counts.  Exit codes: 0 success,
2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analytic import (
    FeasibilityError,
    c_diff,
    setting1_tstar,
    setting2_tstar_asymptotic,
    theorem1_stop,
)
from .core import (
    ConfigError,
    Continue,
    CostModel,
    Discard,
    DiscountSpec,
    EpochSchedule,
    Horizon,
    PolicyConfig,
    PowerLawCurve,
    SampleFlow,
    Switch,
    TabulatedCurve,
    TrainMode,
)
from .env import EnvSpec, NoiseKind, NoiseSpec, ReplayError, replay_from_csv, synth_path
from .evaluate import (
    SWEEP_COLUMNS,
    SweepSpec,
    regret_scaling,
    run_policy_traced,
    sweep,
)
from .policies import PolicyKind, PolicyState, policy_step
from .schedule import build_geometric, build_uniform
from .value import ValueContext

log = logging.getLogger("switchpoint")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fmt(x) -> str:
    """Stable scalar formatting: shortest round-trip repr for floats."""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


# --- Config assembly ---------------------------------------------------------

def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc


def _build_curve(cfg: dict):
    sec = cfg.get("curve")
    if sec is None:
        raise ConfigError("missing [curve] section")
    if "values" in sec:
        return TabulatedCurve(values=tuple(sec["values"]))
    try:
        return PowerLawCurve(
            g_star=float(sec["g_star"]), g0=float(sec["g0"]), alpha=float(sec["alpha"])
        )
    except KeyError as exc:
        raise ConfigError(f"[curve] missing field {exc}") from exc


def _build_flow(cfg: dict) -> SampleFlow:
    sec = cfg.get("flow", {})
    if "batches" in sec:
        return SampleFlow.batches(sec["batches"])
    return SampleFlow.constant(int(sec.get("n", 1)))


def _build_costs(cfg: dict) -> CostModel:
    sec = cfg.get("costs", {})
    mode = (
        TrainMode.POLYNOMIAL_IN_N
        if float(sec.get("q", 0.0)) != 0.0
        else TrainMode.PER_RETRAIN_CONSTANT
    )
    return CostModel(
        c_acq_pre=float(sec.get("c_acq_pre", 0.0)),
        c_acq_post=float(sec.get("c_acq_post", 0.0)),
        c_train=float(sec.get("c_train", 0.0)),
        q=float(sec.get("q", 0.0)),
        train_mode=mode,
        c_s=float(sec.get("c_s", 0.0)),
    )


def _build_schedule(cfg: dict, T: int) -> EpochSchedule:
    sec = cfg.get("schedule")
    if sec is None:
        raise ConfigError("missing [schedule] section")
    kind = sec.get("kind", "explicit")
    if kind == "uniform":
        return build_uniform(int(sec.get("step", 1)), T)
    if kind == "geometric":
        return build_geometric(int(sec.get("first", 1)), float(sec.get("ratio", 2.0)), T)
    if kind == "explicit":
        return EpochSchedule(epochs=tuple(sec["epochs"]))
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _build_noise(cfg: dict, seed: int) -> NoiseSpec:
    sec = cfg.get("noise", {})
    kind_name = sec.get("kind", "gaussian")
    try:
        kind = NoiseKind(kind_name)
    except ValueError as exc:
        raise ConfigError(f"unknown noise kind {kind_name!r}") from exc
    return NoiseSpec(kind=kind, sigma0=float(sec.get("sigma0", 1.0)), seed=seed)


def _build_policy_config(cfg: dict) -> PolicyConfig:
    sec = cfg.get("policy", {})
    ose_idx = sec.get("ose_epoch_index")
    return PolicyConfig(
        rho=float(sec.get("rho", 0.5)),
        gamma=float(sec.get("gamma", 0.0)),
        w=int(sec.get("w", 3)),
        ose_epoch_index=int(ose_idx) if ose_idx is not None else None,
    )


def _policy_kind(name: str) -> PolicyKind:
    try:
        return PolicyKind(name)
    except ValueError as exc:
        raise ConfigError(f"unknown policy {name!r}") from exc


def _horizon_T(cfg: dict) -> Optional[int]:
    sec = cfg.get("horizon", {})
    T = sec.get("T")
    return None if T in (None, "inf") else int(T)


def _base_seed(cfg: dict, section: str, override: Optional[int]) -> int:
    if override is not None:
        return override
    return int(cfg.get(section, {}).get("seed", cfg.get(section, {}).get("base_seed", 0)))


def _build_env(cfg: dict, seed: int) -> EnvSpec:
    T = _horizon_T(cfg)
    if T is None:
        raise ConfigError("simulation requires a finite [horizon] T")
    flow = _build_flow(cfg)
    noise_sec = cfg.get("noise", {})
    return EnvSpec(
        truth=_build_curve(cfg),
        flow=flow,
        schedule=_build_schedule(cfg, T),
        horizon_T=T,
        rho=float(cfg.get("policy", {}).get("rho", 0.5)),
        noise=_build_noise(cfg, seed),
        drift=float(noise_sec.get("drift", 0.0)),
    )


def _build_context(cfg: dict, env: EnvSpec) -> ValueContext:
    return ValueContext(
        flow=env.flow,
        horizon=Horizon.finite(env.horizon_T),
        discount=DiscountSpec(beta=float(cfg.get("discount", {}).get("beta", 1.0))),
        costs=_build_costs(cfg),
        schedule=env.schedule,
    )


def _write_out(out: Optional[str], text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


# --- Subcommands -------------------------------------------------------------

def cmd_analytic(cfg: dict, args) -> int:
    curve = _build_curve(cfg)
    if not isinstance(curve, PowerLawCurve):
        raise ConfigError("analytic summary requires a power-law [curve]")
    flow = _build_flow(cfg)
    if flow.constant_n is None:
        raise ConfigError("analytic summary requires a constant [flow] n")
    n = flow.constant_n
    beta = float(cfg.get("discount", {}).get("beta", 1.0))
    costs = _build_costs(cfg)
    T = _horizon_T(cfg)

    lines = []
    if beta < 1.0:
        summary = theorem1_stop(curve, n, beta, costs)
        lines.append(f"c_diff = {_fmt(summary.c_diff)}")
        lines.append(f"K = {_fmt(summary.K)}")
        if summary.K <= 0:
            lines.append("never switch (K <= 0)")
        else:
            lines.append(f"t0 = {_fmt(summary.t0)}")
            lines.append(f"t_star_continuous = {_fmt(summary.t_star_continuous)}")
            lines.append(f"t_star_integer = {summary.t_star_integer}")
            lines.append(f"value_at_t_star = {_fmt(summary.value_at_t_star)}")
            lines.append(f"switch_is_optimal = {summary.switch_is_optimal}")
            cdiff = summary.c_diff
            try:
                t_asym = setting2_tstar_asymptotic(curve, n, beta, cdiff)
                lines.append(f"t_star_asymptotic = {_fmt(t_asym)}")
            except (FeasibilityError, ValueError):
                pass
    else:
        cdiff = c_diff(costs, 1.0, n)
        lines.append(f"c_diff = {_fmt(cdiff)}")
    if T is not None and curve.g_star > 0:
        t_cont, t_int, ok = setting1_tstar(curve, n, T, costs)
        lines.append(f"undiscounted_T = {T}")
        lines.append(f"undiscounted_t_star_continuous = {_fmt(t_cont)}")
        lines.append(f"undiscounted_t_star_integer = {t_int}")
        lines.append(f"undiscounted_switch_is_optimal = {ok}")
    _write_out(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _decision_label(decision) -> str:
    if isinstance(decision, Switch):
        return f"switch:{decision.challenger_epoch_index}"
    if isinstance(decision, Discard):
        return "discard"
    return "continue"


def cmd_simulate(cfg: dict, args) -> int:
    seed = _base_seed(cfg, "simulate", args.seed)
    replay_sec = cfg.get("replay")
    if replay_sec and "path" in replay_sec:
        T = _horizon_T(cfg)
        with open(replay_sec["path"], newline="") as fh:
            future_fh = None
            if "future" in replay_sec:
                future_fh = open(replay_sec["future"], newline="")
            try:
                path = replay_from_csv(fh, future_fh, horizon_T=T)
            finally:
                if future_fh is not None:
                    future_fh.close()
        flow = _build_flow(cfg)
        sched = EpochSchedule(epochs=tuple(e.t for e in path.estimates))
        ctx = ValueContext(
            flow=flow,
            horizon=Horizon.finite(path.horizon_T),
            discount=DiscountSpec(beta=float(cfg.get("discount", {}).get("beta", 1.0))),
            costs=_build_costs(cfg),
            schedule=sched,
        )
    else:
        env = _build_env(cfg, seed)
        ctx = _build_context(cfg, env)
        path = synth_path(env)

    kind = _policy_kind(cfg.get("policy", {}).get("kind", "gse"))
    pconf = _build_policy_config(cfg)
    if path.future_gaps is not None:
        result, trace = run_policy_traced(ctx, path, kind, pconf)
        summary = (
            "# summary "
            f"decision={_decision_label(result.decision)} "
            f"stop_epoch={result.stop_epoch} "
            f"total_value={_fmt(result.total_value)} "
            f"oracle_value={_fmt(result.oracle_value)} "
            f"regret={_fmt(result.regret)}"
        )
    else:
        # replayed estimates without realized future gaps: trace the decisions
        # only, since realized value and the hindsight benchmark need them
        state = PolicyState(kind=kind, config=pconf)
        trace = []
        decision = None
        for est in path.estimates:
            rec = policy_step(ctx, state, est)
            trace.append(rec)
            if not isinstance(rec.decision, Continue):
                decision = rec.decision
                break
        if decision is None:
            raise RuntimeError("policy failed to terminate at the final epoch")
        summary = (
            "# summary "
            f"decision={_decision_label(decision)} "
            f"stop_epoch={decision.epoch_index}"
        )

    lines = ["epoch,t,N,gap_estimate,v_lb,v_hat,v_ub,decision"]
    for rec in trace:
        lines.append(
            f"{rec.k},{rec.t},{rec.n_cum},{_fmt(rec.g_hat)},{_fmt(rec.v_lb)},"
            f"{_fmt(rec.v_hat)},{_fmt(rec.v_ub)},{_decision_label(rec.decision)}"
        )
    lines.append(summary)
    _write_out(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(cfg: dict, args) -> int:
    sec = cfg.get("sweep")
    if sec is None:
        raise ConfigError("missing [sweep] section")
    seed = _base_seed(cfg, "sweep", args.seed)
    env = _build_env(cfg, seed)
    try:
        spec = SweepSpec(
            env=env,
            c_acq_grid=tuple(float(x) for x in sec["c_acq"]),
            c_train_grid=tuple(float(x) for x in sec["c_train"]),
            beta_grid=tuple(float(x) for x in sec["beta"]),
            c_s_grid=tuple(float(x) for x in sec["c_s"]),
            policies=tuple(_policy_kind(p) for p in sec["policies"]),
            policy_config=_build_policy_config(cfg),
            seeds=int(sec.get("seeds", 30)),
            base_seed=seed,
        )
    except KeyError as exc:
        raise ConfigError(f"[sweep] missing field {exc}") from exc
    rows = sweep(spec, workers=args.workers)
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in SWEEP_COLUMNS))
    _write_out(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_regret_scaling(cfg: dict, args) -> int:
    sec = cfg.get("regret_scaling")
    if sec is None:
        raise ConfigError("missing [regret_scaling] section")
    seed = _base_seed(cfg, "regret_scaling", args.seed)
    kind = _policy_kind(sec.get("policy", "lsec"))
    T_values = [int(T) for T in sec.get("T_values", [1024, 4096, 16384, 65536])]
    seeds = int(sec.get("seeds", 200))
    curve = _build_curve(cfg)
    flow = _build_flow(cfg)
    costs = _build_costs(cfg)
    beta = float(cfg.get("discount", {}).get("beta", 1.0))
    base_pconf = _build_policy_config(cfg)
    sched_sec = cfg.get("schedule", {})
    first = int(sched_sec.get("first", 1))
    ratio = float(sched_sec.get("ratio", 2.0))

    envs, pconfs = [], []
    for T in T_values:
        sched = build_geometric(first, ratio, T)
        pconf = base_pconf
        if kind is PolicyKind.OSE:
            t_eval = math.ceil(T ** (2.0 / 3.0))
            eps = sorted(set(sched.epochs) | {t_eval})
            sched = EpochSchedule(epochs=tuple(eps))
            pconf = PolicyConfig(
                rho=base_pconf.rho, gamma=base_pconf.gamma, w=base_pconf.w,
                ose_epoch_index=eps.index(t_eval) + 1,
            )
        env = EnvSpec(
            truth=curve, flow=flow, schedule=sched, horizon_T=T,
            rho=base_pconf.rho, noise=_build_noise(cfg, seed),
            drift=float(cfg.get("noise", {}).get("drift", 0.0)),
        )
        ctx = ValueContext(
            flow=flow, horizon=Horizon.finite(T),
            discount=DiscountSpec(beta=beta), costs=costs, schedule=sched,
        )
        envs.append((env, ctx))
        pconfs.append(pconf)

    points, slope = regret_scaling(
        envs, kind, pconfs, seeds=seeds, base_seed=seed, workers=args.workers
    )
    lines = ["T,mean_regret"]
    for T, r in points:
        lines.append(f"{T},{_fmt(r)}")
    lines.append(f"# fitted_slope = {_fmt(slope)}")
    _write_out(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_replay_validate(cfg: dict, args) -> int:
    sec = cfg.get("replay")
    if sec is None or "path" not in sec:
        raise ConfigError("missing [replay] path")
    with open(sec["path"], newline="") as fh:
        future_fh = open(sec["future"], newline="") if "future" in sec else None
        try:
            path = replay_from_csv(fh, future_fh, horizon_T=_horizon_T(cfg))
        finally:
            if future_fh is not None:
                future_fh.close()
    lines = [
        f"epochs = {len(path)}",
        f"steps = {path.estimates[0].t}..{path.estimates[-1].t}",
        f"horizon_T = {path.horizon_T}",
        f"future_gaps = {'present' if path.future_gaps is not None else 'absent'}",
        "ok",
    ]
    _write_out(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


# --- Entry point -------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="switchpoint",
        description="Decision engine and simulation harness for incumbent-vs-"
        "challenger model switching.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("analytic", cmd_analytic),
        ("simulate", cmd_simulate),
        ("sweep", cmd_sweep),
        ("regret-scaling", cmd_regret_scaling),
        ("replay-validate", cmd_replay_validate),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--seed", type=int, default=None, help="override base seed")
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--workers", type=int, default=1, help="parallel workers")
        sp.set_defaults(func=fn)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("SWITCHPOINT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.func(cfg, args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        log.error("configuration error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, AssertionError, ArithmeticError) as exc:
        log.error("runtime failure: %s", exc)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
