"""Decision engine and simulation harness for the incumbent-vs-challenger
model-switching problem: discounted switching values, analytic optimal
stopping points, sequential stopping policies, oracles, and seeded
ensemble evaluation.
"""

from .core import (
    ConfigError,
    Continue,
    CostModel,
    Decision,
    Discard,
    DiscountSpec,
    EpochSchedule,
    GapEstimate,
    GapPath,
    Horizon,
    PolicyConfig,
    PowerLawCurve,
    RunResult,
    SampleFlow,
    ScheduleKind,
    Switch,
    TabulatedCurve,
    TrainMode,
    ValueBreakdown,
)
from .value import ValueContext, delta_v, setting2_closed_form, value_discard, value_switch
from .analytic import AnalyticSummary, theorem1_stop
from .env import EnvSpec, NoiseKind, NoiseSpec, replay_from_csv, synth_path
from .policies import PolicyKind, PolicyState, policy_step
from .oracle import parametric_oracle, path_oracle
from .evaluate import SweepSpec, ensemble, run_policy, sweep

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Continue", "CostModel", "Decision", "Discard",
    "DiscountSpec", "EpochSchedule", "GapEstimate", "GapPath", "Horizon",
    "PolicyConfig", "PowerLawCurve", "RunResult", "SampleFlow", "ScheduleKind",
    "Switch", "TabulatedCurve", "TrainMode", "ValueBreakdown",
    "ValueContext", "delta_v", "setting2_closed_form", "value_discard",
    "value_switch", "AnalyticSummary", "theorem1_stop",
    "EnvSpec", "NoiseKind", "NoiseSpec", "replay_from_csv", "synth_path",
    "PolicyKind", "PolicyState", "policy_step",
    "parametric_oracle", "path_oracle",
    "SweepSpec", "ensemble", "run_policy", "sweep",
    "__version__",
]
