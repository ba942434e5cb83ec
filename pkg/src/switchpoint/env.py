"""Gap-estimate sample paths: seeded synthetic generation from a true curve,
and replay of externally supplied CSV paths.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import IO, Optional, Union

import numpy as np

from .core import (
    ConfigError,
    EpochSchedule,
    GapEstimate,
    GapPath,
    PowerLawCurve,
    SampleFlow,
    TabulatedCurve,
)

__all__ = [
    "NoiseKind",
    "NoiseSpec",
    "EnvSpec",
    "synth_path",
    "replay_from_csv",
    "ReplayError",
]

Curve = Union[PowerLawCurve, TabulatedCurve]


class NoiseKind(Enum):
    GAUSSIAN = "gaussian"
    BOUNDED = "bounded"  # Gaussian clipped to [-2, 2], matching unit-bounded gains


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.GAUSSIAN
    sigma0: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ConfigError("sigma0 must be >= 0")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class EnvSpec:
    """A complete synthetic environment: truth, flow, schedule, split, noise,
    and an optional linear per-step drift added to the true gap."""

    truth: Curve
    flow: SampleFlow
    schedule: EpochSchedule
    horizon_T: int
    rho: float = 0.5
    noise: NoiseSpec = NoiseSpec()
    drift: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ConfigError("rho must lie in (0, 1)")
        if self.schedule.epochs[-1] > self.horizon_T:
            raise ConfigError("schedule extends beyond the horizon")
        if isinstance(self.truth, TabulatedCurve) and len(self.truth.values) < self.horizon_T:
            raise ConfigError("tabulated curve must cover all steps up to T")
        flow_max = self.flow.max_t
        if flow_max is not None and flow_max < self.horizon_T:
            raise ConfigError("sample flow does not cover the horizon")

    def true_gap_at_epoch(self, t: int) -> float:
        """Undrifted expected gap of the challenger trained at step t."""
        if isinstance(self.truth, PowerLawCurve):
            return self.truth.gap_at_samples(self.flow.cumulative(t))
        return self.truth.gap_at_step(t)

    def with_seed(self, seed: int) -> "EnvSpec":
        return EnvSpec(
            truth=self.truth, flow=self.flow, schedule=self.schedule,
            horizon_T=self.horizon_T, rho=self.rho,
            noise=NoiseSpec(kind=self.noise.kind, sigma0=self.noise.sigma0, seed=seed),
            drift=self.drift,
        )


def _clip_noise(kind: NoiseKind, eps: np.ndarray) -> np.ndarray:
    if kind is NoiseKind.BOUNDED:
        return np.clip(eps, -2.0, 2.0)
    return eps


def synth_path(spec: EnvSpec, include_future: bool = True) -> GapPath:
    """Generate one seeded sample path of per-epoch gap estimates.

    Epoch k's estimate is the drifted truth plus independent noise of standard
    deviation sigma0 / sqrt(rho * N_{t_k}).  The future-gap matrix freezes each
    challenger's expected gap at its training size; only drift and per-step
    noise of sd sigma0 / sqrt(n_tau) vary after deployment.
    """
    rng = np.random.default_rng(spec.noise.seed)
    epochs = spec.schedule.epochs
    K = len(epochs)
    T = spec.horizon_T
    n_cum = np.array([spec.flow.cumulative(t) for t in epochs], dtype=np.int64)
    frozen = np.array([spec.true_gap_at_epoch(t) for t in epochs])

    sd_epoch = spec.noise.sigma0 / np.sqrt(spec.rho * n_cum)
    eps = _clip_noise(spec.noise.kind, rng.standard_normal(K) * sd_epoch)
    g_hat = frozen + spec.drift * np.asarray(epochs, dtype=float) + eps

    estimates = tuple(
        GapEstimate(k=k + 1, t=epochs[k], n_cum=int(n_cum[k]), g_hat=float(g_hat[k]))
        for k in range(K)
    )

    future = None
    if include_future:
        steps = np.arange(1, T + 1, dtype=float)
        sd_step = spec.noise.sigma0 / np.sqrt(spec.flow.n_array(T).astype(float))
        raw = _clip_noise(spec.noise.kind, rng.standard_normal((K, T)) * sd_step)
        future = frozen[:, None] + spec.drift * steps[None, :] + raw
        for k in range(K):
            future[k, : epochs[k]] = np.nan
    return GapPath(estimates=estimates, future_gaps=future, horizon_T=T)


class ReplayError(ValueError):
    """Malformed or inconsistent replay file."""


_REQUIRED_COLUMNS = ("epoch_index", "k_time_step", "cumulative_samples", "gap_estimate")
_FUTURE_COLUMNS = ("challenger_epoch_index", "time_step", "gap")


def replay_from_csv(
    reader: IO[str],
    future_reader: Optional[IO[str]] = None,
    horizon_T: Optional[int] = None,
) -> GapPath:
    """Load a gap path from CSV (and optionally its future-gap file).

    The main file must carry columns epoch_index,k_time_step,
    cumulative_samples,gap_estimate; the future file, when given, carries
    challenger_epoch_index,time_step,gap.
    """
    rows = csv.DictReader(reader)
    if rows.fieldnames is None:
        raise ReplayError("empty replay file")
    missing = [c for c in _REQUIRED_COLUMNS if c not in rows.fieldnames]
    if missing:
        raise ReplayError(f"missing required columns: {', '.join(missing)}")

    estimates: list[GapEstimate] = []
    seen_k: set[int] = set()
    for lineno, row in enumerate(rows, start=2):
        try:
            k = int(row["epoch_index"])
            t = int(row["k_time_step"])
            n_cum = int(row["cumulative_samples"])
            g_hat = float(row["gap_estimate"])
        except (TypeError, ValueError) as exc:
            raise ReplayError(f"line {lineno}: malformed row ({exc})") from exc
        if k in seen_k:
            raise ReplayError(f"line {lineno}: duplicated epoch index {k}")
        seen_k.add(k)
        estimates.append(GapEstimate(k=k, t=t, n_cum=n_cum, g_hat=g_hat))
    if not estimates:
        raise ReplayError("replay file contains no estimates")
    estimates.sort(key=lambda e: e.k)
    if [e.k for e in estimates] != list(range(1, len(estimates) + 1)):
        raise ReplayError("epoch indices must be exactly 1..K")
    for a, b in zip(estimates, estimates[1:]):
        if b.n_cum <= a.n_cum:
            raise ReplayError(
                f"cumulative samples must be strictly increasing (epochs {a.k} -> {b.k})"
            )
        if b.t <= a.t:
            raise ReplayError(f"time steps must be strictly increasing (epochs {a.k} -> {b.k})")

    future = None
    T = horizon_T
    if future_reader is not None:
        frows = csv.DictReader(future_reader)
        if frows.fieldnames is None:
            raise ReplayError("empty future-gap file")
        fmissing = [c for c in _FUTURE_COLUMNS if c not in frows.fieldnames]
        if fmissing:
            raise ReplayError(f"future-gap file missing columns: {', '.join(fmissing)}")
        triples: list[tuple[int, int, float]] = []
        for lineno, row in enumerate(frows, start=2):
            try:
                triples.append(
                    (int(row["challenger_epoch_index"]), int(row["time_step"]), float(row["gap"]))
                )
            except (TypeError, ValueError) as exc:
                raise ReplayError(f"future-gap line {lineno}: malformed row ({exc})") from exc
        if not triples:
            raise ReplayError("future-gap file contains no rows")
        if T is None:
            T = max(t for _, t, _ in triples)
        K = len(estimates)
        future = np.full((K, T), np.nan)
        for k, t, g in triples:
            if not (1 <= k <= K):
                raise ReplayError(f"future-gap row references unknown epoch {k}")
            if not (1 <= t <= T):
                raise ReplayError(f"future-gap row references step {t} outside 1..{T}")
            future[k - 1, t - 1] = g
    elif T is None:
        T = estimates[-1].t

    return GapPath(estimates=tuple(estimates), future_gaps=future, horizon_T=T)
