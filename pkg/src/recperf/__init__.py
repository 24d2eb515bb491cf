"""Analytical throughput upper-bound model for distributed DLRM-style
recommender inference and training."""

__version__ = "0.1.0"

from recperf.config import (  # noqa: F401
    CcOp,
    CcSpec,
    CcTopology,
    ModelConfig,
    OverlapPolicy,
    RunMode,
    Scenario,
    ShardingKind,
    ShardingMode,
    SystemSpec,
    load_scenario,
    preset,
    serialize_scenario,
    validate,
)
from recperf.engine import StepEstimate, estimate_step, inference_step, sla_check, training_step  # noqa: F401
