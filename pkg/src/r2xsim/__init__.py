"""Deterministic simulation toolkit for robot-to-everything orchestration:
prioritized grid planning, link adaptation under delayed feedback, semantic
sensing payloads, and intent-driven configuration."""

from .linkadapt import PolicySpec, gains, run_policy, snr_conditioned_stats
from .metrics import KpiRecord, completion_time, run_summary, tail_stats, utfr
from .orchestrator import (
    ExternalIntentEngine,
    LoopBudget,
    OrchestratorConfig,
    RuleIntentEngine,
    WarehouseSimulation,
    correct_loop,
    loop_feasible,
    offload_gate,
    rule_intent,
    select_sense_mode,
    validate,
)
from .planner import Constraint, PlanConfig, PlanningInfeasible, SpaceTimePath, plan
from .radio import (
    LinkState,
    McsTable,
    PathGainMap,
    RadioConfig,
    allocate,
    bler,
    default_mcs_table,
    sample_trace,
    select_mcs,
)
from .scenarios import Scenario, ScenarioError, load_scenario, run_one
from .sensing import Codebook, PayloadParams, SenseConfig, payload_bytes, vq_decode, vq_encode
from .world import Clock, GridWorld, HumanTrack, RobotState, human_forecast

__version__ = "0.1.0"

__all__ = [
    "Clock",
    "Codebook",
    "Constraint",
    "ExternalIntentEngine",
    "GridWorld",
    "HumanTrack",
    "KpiRecord",
    "LinkState",
    "LoopBudget",
    "McsTable",
    "OrchestratorConfig",
    "PathGainMap",
    "PayloadParams",
    "PlanConfig",
    "PlanningInfeasible",
    "PolicySpec",
    "RadioConfig",
    "RobotState",
    "RuleIntentEngine",
    "Scenario",
    "ScenarioError",
    "SenseConfig",
    "SpaceTimePath",
    "WarehouseSimulation",
    "allocate",
    "bler",
    "completion_time",
    "correct_loop",
    "default_mcs_table",
    "gains",
    "human_forecast",
    "load_scenario",
    "loop_feasible",
    "offload_gate",
    "payload_bytes",
    "plan",
    "rule_intent",
    "run_one",
    "run_policy",
    "run_summary",
    "sample_trace",
    "select_mcs",
    "select_sense_mode",
    "snr_conditioned_stats",
    "tail_stats",
    "utfr",
    "validate",
    "vq_decode",
    "vq_encode",
]
