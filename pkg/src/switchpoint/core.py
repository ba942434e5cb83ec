"""Shared domain types: sample flows, horizons, costs, gap curves, schedules,
decisions, and run results.

All types are immutable value objects; they carry their own validation and are
safe to share across concurrent workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SampleFlow",
    "Horizon",
    "DiscountSpec",
    "TrainMode",
    "CostModel",
    "PowerLawCurve",
    "TabulatedCurve",
    "ScheduleKind",
    "EpochSchedule",
    "PolicyConfig",
    "GapEstimate",
    "GapPath",
    "Continue",
    "Switch",
    "Discard",
    "Decision",
    "ValueBreakdown",
    "RunResult",
    "cumulative_samples",
    "gap",
]


class ConfigError(ValueError):
    """Invalid configuration of a domain object or operation."""


@dataclass(frozen=True)
class SampleFlow:
    """Per-time-step sample arrivals n_t, either constant or an explicit batch list."""

    constant_n: Optional[int] = None
    batch_sizes: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if (self.constant_n is None) == (self.batch_sizes is None):
            raise ConfigError("exactly one of constant_n / batch_sizes must be set")
        if self.constant_n is not None:
            if self.constant_n < 1:
                raise ConfigError("constant_n must be >= 1")
        else:
            batches = tuple(int(b) for b in self.batch_sizes)
            if not batches or any(b < 1 for b in batches):
                raise ConfigError("every batch size must be an integer >= 1")
            object.__setattr__(self, "batch_sizes", batches)
            object.__setattr__(
                self, "_cumsum", np.cumsum(np.asarray(batches, dtype=np.int64))
            )

    @staticmethod
    def constant(n: int) -> "SampleFlow":
        return SampleFlow(constant_n=n)

    @staticmethod
    def batches(sizes: Sequence[int]) -> "SampleFlow":
        return SampleFlow(batch_sizes=tuple(sizes))

    @property
    def max_t(self) -> Optional[int]:
        """Largest time step covered, or None for an unbounded constant flow."""
        return None if self.constant_n is not None else len(self.batch_sizes)

    def n_at(self, t: int) -> int:
        self._check_t(t)
        if self.constant_n is not None:
            return self.constant_n
        return self.batch_sizes[t - 1]

    def cumulative(self, t: int) -> int:
        """N_t, the cumulative sample count through step t."""
        self._check_t(t)
        if self.constant_n is not None:
            return self.constant_n * t
        return int(self._cumsum[t - 1])

    def cumulative_array(self, t_max: int) -> np.ndarray:
        """Vector of N_t for t = 1..t_max."""
        self._check_t(t_max)
        if self.constant_n is not None:
            return self.constant_n * np.arange(1, t_max + 1, dtype=np.int64)
        return self._cumsum[:t_max].copy()

    def n_array(self, t_max: int) -> np.ndarray:
        """Vector of n_t for t = 1..t_max."""
        self._check_t(t_max)
        if self.constant_n is not None:
            return np.full(t_max, self.constant_n, dtype=np.int64)
        return np.asarray(self.batch_sizes[:t_max], dtype=np.int64)

    def _check_t(self, t: int) -> None:
        if t < 1:
            raise IndexError(f"time step {t} out of range (must be >= 1)")
        if self.batch_sizes is not None and t > len(self.batch_sizes):
            raise IndexError(
                f"time step {t} out of range (flow covers {len(self.batch_sizes)} steps)"
            )


@dataclass(frozen=True)
class Horizon:
    """Number of time steps T, or infinite."""

    T: Optional[int] = None  # None means infinite

    def __post_init__(self):
        if self.T is not None and self.T < 2:
            raise ConfigError("finite horizon requires T >= 2")

    @staticmethod
    def finite(T: int) -> "Horizon":
        return Horizon(T=T)

    @staticmethod
    def infinite() -> "Horizon":
        return Horizon(T=None)

    @property
    def is_finite(self) -> bool:
        return self.T is not None


@dataclass(frozen=True)
class DiscountSpec:
    """Per-epoch discount factor beta in (0, 1]."""

    beta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ConfigError("beta must lie in (0, 1]")

    def requires_finite(self) -> bool:
        return self.beta == 1.0


class TrainMode(Enum):
    PER_RETRAIN_CONSTANT = "per_retrain_constant"
    POLYNOMIAL_IN_N = "polynomial_in_n"


@dataclass(frozen=True)
class CostModel:
    """Acquisition, training, and switching costs with their timing.

    Training cost at a retraining step t is either the flat coefficient
    (per-retrain constant, q = 0) or c_train * N_t**q (polynomial).
    """

    c_acq_pre: float = 0.0
    c_acq_post: float = 0.0
    c_train: float = 0.0
    q: float = 0.0
    train_mode: TrainMode = TrainMode.PER_RETRAIN_CONSTANT
    c_s: float = 0.0

    def __post_init__(self):
        for name in ("c_acq_pre", "c_acq_post", "c_train", "q", "c_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.train_mode is TrainMode.PER_RETRAIN_CONSTANT and self.q != 0:
            raise ConfigError("per-retrain-constant training requires q = 0")

    def train_cost(self, n_cum: int | float | np.ndarray):
        """Training cost charged at a retraining step with cumulative count N."""
        if self.train_mode is TrainMode.PER_RETRAIN_CONSTANT:
            if np.ndim(n_cum) == 0:
                return self.c_train
            return np.full(np.shape(n_cum), self.c_train)
        return self.c_train * np.asarray(n_cum, dtype=float) ** self.q


@dataclass(frozen=True)
class PowerLawCurve:
    """Expected per-sample gap as a function of cumulative sample count:
    G = g_star - g0 * N**(-alpha).  May be negative at small N; never clipped.
    """

    g_star: float
    g0: float
    alpha: float

    def __post_init__(self):
        if self.g_star < 0:
            raise ConfigError("g_star must be >= 0")
        if self.g0 <= 0:
            raise ConfigError("g0 must be > 0")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")

    def gap_at_samples(self, n_cum):
        """Gap value at cumulative sample count N (scalar or array, N >= 1)."""
        n_arr = np.asarray(n_cum, dtype=float)
        if np.any(n_arr < 1):
            raise ValueError("gap curve defined only for cumulative samples >= 1")
        out = self.g_star - self.g0 * n_arr ** (-self.alpha)
        return float(out) if np.ndim(n_cum) == 0 else out


@dataclass(frozen=True)
class TabulatedCurve:
    """User-supplied per-time-step gap values; values[t-1] is the gap at step t."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ConfigError("tabulated curve must be nonempty")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def gap_at_step(self, t: int) -> float:
        if not (1 <= t <= len(self.values)):
            raise IndexError(f"step {t} outside tabulated range")
        return self.values[t - 1]


class ScheduleKind(Enum):
    UNIFORM = "uniform"
    GEOMETRIC = "geometric"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class EpochSchedule:
    """Strictly increasing decision-epoch time steps t_1 < t_2 < ... <= T."""

    epochs: tuple[int, ...]
    kind: ScheduleKind = ScheduleKind.EXPLICIT

    def __post_init__(self):
        eps = tuple(int(t) for t in self.epochs)
        if not eps:
            raise ConfigError("schedule must contain at least one epoch")
        if eps[0] < 1 or any(b <= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epochs must be strictly increasing and >= 1")
        object.__setattr__(self, "epochs", eps)

    def __len__(self) -> int:
        return len(self.epochs)

    def __iter__(self):
        return iter(self.epochs)

    def step_of(self, k: int) -> int:
        """Time step of the k-th epoch (1-indexed k)."""
        if not (1 <= k <= len(self.epochs)):
            raise IndexError(f"epoch index {k} outside schedule of size {len(self.epochs)}")
        return self.epochs[k - 1]


@dataclass(frozen=True)
class PolicyConfig:
    """Tuning knobs shared by the stopping policies."""

    rho: float = 0.5
    gamma: float = 0.0
    w: int = 3
    ose_epoch_index: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ConfigError("rho must lie in (0, 1)")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.w < 2:
            raise ConfigError("smoothing window w must be >= 2")


@dataclass(frozen=True)
class GapEstimate:
    """One per-epoch observation: epoch index k, its time step, cumulative
    sample count, and the empirical gap estimate."""

    k: int
    t: int
    n_cum: int
    g_hat: float


@dataclass(frozen=True)
class GapPath:
    """A realized sample path of gap estimates, one per decision epoch.

    future_gaps, when present, is a (K, T) matrix: row k-1 holds the realized
    per-step gap of the challenger trained at epoch k for steps t_k+1..T
    (entries at steps <= t_k are NaN).  It backs the path-adaptive oracle and
    post-switch value accounting.
    """

    estimates: tuple[GapEstimate, ...]
    future_gaps: Optional[np.ndarray] = None
    horizon_T: Optional[int] = None

    def __post_init__(self):
        ests = tuple(self.estimates)
        if not ests:
            raise ConfigError("gap path must contain at least one estimate")
        for i, e in enumerate(ests, start=1):
            if e.k != i:
                raise ConfigError(f"estimates must be ordered with one per epoch (got k={e.k} at position {i})")
        steps = [e.t for e in ests]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ConfigError("epoch time steps must be strictly increasing")
        cums = [e.n_cum for e in ests]
        if any(b <= a for a, b in zip(cums, cums[1:])):
            raise ConfigError("cumulative sample counts must be strictly increasing")
        object.__setattr__(self, "estimates", ests)
        if self.future_gaps is not None:
            fg = np.asarray(self.future_gaps, dtype=float)
            if fg.shape[0] != len(ests):
                raise ConfigError("future_gaps rows must align with epochs")
            if self.horizon_T is not None and fg.shape[1] != self.horizon_T:
                raise ConfigError("future_gaps columns must cover steps 1..T")
            fg.setflags(write=False)
            object.__setattr__(self, "future_gaps", fg)

    def __len__(self) -> int:
        return len(self.estimates)

    def future_gap_row(self, k: int) -> np.ndarray:
        """Realized per-step gaps of the challenger trained at epoch k."""
        if self.future_gaps is None:
            raise ConfigError("path has no future-gap matrix")
        return self.future_gaps[k - 1]


# --- Decisions ---------------------------------------------------------------

@dataclass(frozen=True)
class Continue:
    pass


@dataclass(frozen=True)
class Switch:
    epoch_index: int
    challenger_epoch_index: int

    def __post_init__(self):
        if self.challenger_epoch_index not in (self.epoch_index, self.epoch_index - 1):
            raise ConfigError(
                "switch may deploy only the current or previous epoch's challenger"
            )


@dataclass(frozen=True)
class Discard:
    epoch_index: int


Decision = Continue | Switch | Discard


@dataclass(frozen=True)
class ValueBreakdown:
    """Discounted value of a switch decision, split by cost timing.

    The total is stored as the exact arithmetic combination of the parts so
    the identity total == -pre_cost - switch_cost + post_net holds bit-exactly.
    """

    pre_cost: float
    switch_cost: float
    post_net: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "total", -self.pre_cost - self.switch_cost + self.post_net
        )


@dataclass(frozen=True)
class RunResult:
    """One policy run over one path: decision trace endpoint plus value accounting."""

    decision: Decision
    pi_stream: np.ndarray
    total_value: float
    oracle_value: float
    regret: float
    stop_epoch: int

    def __post_init__(self):
        pi = np.asarray(self.pi_stream, dtype=float)
        pi.setflags(write=False)
        object.__setattr__(self, "pi_stream", pi)


# --- Operations --------------------------------------------------------------

def cumulative_samples(flow: SampleFlow, t: int) -> int:
    """N_t = sum of n_tau for tau <= t."""
    return flow.cumulative(t)


def gap(curve: PowerLawCurve, flow: SampleFlow, t: int) -> float:
    """G(t) = g_star - g0 * N_t**(-alpha)."""
    n_cum = flow.cumulative(t)
    if n_cum < 1:
        raise ValueError("gap undefined for zero cumulative samples")
    return curve.gap_at_samples(n_cum)
