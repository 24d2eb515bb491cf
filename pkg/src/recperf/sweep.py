"""Parameter sweeps, system comparisons, and CSV/JSON emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from recperf.config import (
    CcOp,
    MODEL_PRESETS,
    ModelConfig,
    OverlapPolicy,
    RunMode,
    Scenario,
    ShardingKind,
    ShardingMode,
    require_valid,
)
from recperf.engine import (
    INFERENCE_PHASES,
    TRAINING_PHASES,
    StepEstimate,
    estimate_step,
)

DEFAULT_LATENCY_RANGE = (0.5e-6, 10e-6)      # swept collective latency, seconds
DEFAULT_BANDWIDTH_RANGE = (100e9, 1000e9)    # per-chip bandwidth, bytes/s
DEFAULT_LATENCY_STEPS = 20
DEFAULT_BANDWIDTH_STEPS = 19


@dataclass(frozen=True)
class SweepGrid:
    latency_axis: tuple[float, ...]
    bandwidth_axis: tuple[float, ...]
    base: Scenario
    vary_op_kinds: tuple[CcOp, ...] = tuple(CcOp)

    def check(self) -> None:
        for axis, label in ((self.latency_axis, "latency"), (self.bandwidth_axis, "bandwidth")):
            if not axis:
                raise ValueError(f"{label} axis is empty")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError(f"{label} axis must be strictly increasing")


@dataclass(frozen=True)
class SweepPoint:
    latency: float
    bandwidth: float
    estimate: StepEstimate


@dataclass(frozen=True)
class ComparisonRow:
    config_label: str
    candidate_qps: float
    candidate_metric: float
    baseline_qps: float
    baseline_metric: float

    @property
    def speedup(self) -> float:
        return self.candidate_qps / self.baseline_qps


def latency_axis(low: float = DEFAULT_LATENCY_RANGE[0], high: float = DEFAULT_LATENCY_RANGE[1],
                 steps: int = DEFAULT_LATENCY_STEPS) -> tuple[float, ...]:
    return tuple(float(x) for x in np.geomspace(low, high, steps))


def bandwidth_axis(low: float = DEFAULT_BANDWIDTH_RANGE[0], high: float = DEFAULT_BANDWIDTH_RANGE[1],
                   steps: int = DEFAULT_BANDWIDTH_STEPS) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(low, high, steps))


def default_grid(base: Scenario) -> SweepGrid:
    return SweepGrid(latency_axis=latency_axis(), bandwidth_axis=bandwidth_axis(), base=base)


def with_cc_point(scenario: Scenario, latency: float, bandwidth: float,
                  kinds: Sequence[CcOp] = tuple(CcOp)) -> Scenario:
    """Override the swept op-kind latencies and the per-chip bandwidth."""
    cc = scenario.system.chip.cc
    latencies = dict(cc.latency_by_op)
    for kind in kinds:
        latencies[kind] = latency
    new_cc = replace(cc, latency_by_op=latencies, per_chip_bandwidth=bandwidth)
    chip = replace(scenario.system.chip, cc=new_cc)
    return replace(scenario, system=replace(scenario.system, chip=chip))


def run_sweep(grid: SweepGrid) -> list[SweepPoint]:
    """One estimate per grid point, latency-major row order."""
    grid.check()
    require_valid(grid.base)
    points = []
    for latency in grid.latency_axis:
        for bandwidth in grid.bandwidth_axis:
            scenario = with_cc_point(grid.base, latency, bandwidth, grid.vary_op_kinds)
            points.append(SweepPoint(latency, bandwidth, estimate_step(scenario)))
    return points


def default_compare_configs() -> list[tuple[str, ShardingKind, RunMode]]:
    configs = []
    for mode in (RunMode.INFERENCE, RunMode.TRAINING):
        for model in ("dlrm-rm2-small", "dlrm-rm2-large"):
            for sharding in (ShardingKind.UNSHARDED, ShardingKind.FULLY_SHARDED):
                configs.append((model, sharding, mode))
    return configs


def _row_metric(estimate: StepEstimate) -> float:
    if estimate.mode == RunMode.TRAINING:
        return estimate.allreduce_fraction
    return estimate.mem_util


def compare(
    baseline: Scenario,
    candidate: Scenario,
    configs: Iterable[tuple[str | ModelConfig, ShardingKind, RunMode]] | None = None,
) -> list[ComparisonRow]:
    """Evaluate both systems over a list of (model, sharding, mode) configs.

    The reported metric is memory utilization for inference rows and the
    all-reduce time share for training rows.
    """
    rows = []
    for model, sharding, mode in (configs if configs is not None else default_compare_configs()):
        if isinstance(model, str):
            model = MODEL_PRESETS[model]
        label = f"{model.name or 'model'}/{sharding.value}/{mode.value}"

        def run(base: Scenario) -> StepEstimate:
            scenario = replace(base, model=model, sharding=ShardingMode(kind=sharding), mode=mode)
            return estimate_step(scenario)

        cand = run(candidate)
        base = run(baseline)
        rows.append(ComparisonRow(
            config_label=label,
            candidate_qps=cand.qps, candidate_metric=_row_metric(cand),
            baseline_qps=base.qps, baseline_metric=_row_metric(base),
        ))
    return rows


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _phase_names(points: Sequence[SweepPoint]) -> tuple[str, ...]:
    mode = points[0].estimate.mode
    return TRAINING_PHASES if mode == RunMode.TRAINING else INFERENCE_PHASES


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    if not points:
        raise ValueError("empty sweep table")
    phases = _phase_names(points)
    header = ["latency_s", "bandwidth_Bps", "qps", "samples_per_sec", "step_time_s",
              "mem_util", "allreduce_fraction", "bottleneck", *phases]
    lines = [",".join(header)]
    for point in points:
        e = point.estimate
        allred = "" if e.allreduce_fraction is None else repr(e.allreduce_fraction)
        row = [repr(point.latency), repr(point.bandwidth), repr(e.qps), repr(e.samples_per_sec),
               repr(e.step_time), repr(e.mem_util), allred, e.bottleneck]
        row += [repr(e.phase(name)) for name in phases]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def sweep_json(points: Sequence[SweepPoint]) -> str:
    if not points:
        raise ValueError("empty sweep table")
    rows = [
        {"latency_s": p.latency, "bandwidth_Bps": p.bandwidth, **p.estimate.to_dict()}
        for p in points
    ]
    return json.dumps(rows, indent=2) + "\n"


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    if not rows:
        raise ValueError("empty comparison table")
    header = "config_label,candidate_qps,candidate_metric,baseline_qps,baseline_metric,speedup"
    lines = [header]
    for row in rows:
        lines.append(",".join([
            row.config_label, repr(row.candidate_qps), repr(row.candidate_metric),
            repr(row.baseline_qps), repr(row.baseline_metric), repr(row.speedup),
        ]))
    return "\n".join(lines) + "\n"


def comparison_json(rows: Sequence[ComparisonRow]) -> str:
    if not rows:
        raise ValueError("empty comparison table")
    payload = [
        {
            "config_label": row.config_label,
            "candidate_qps": row.candidate_qps, "candidate_metric": row.candidate_metric,
            "baseline_qps": row.baseline_qps, "baseline_metric": row.baseline_metric,
            "speedup": row.speedup,
        }
        for row in rows
    ]
    return json.dumps(payload, indent=2) + "\n"


def emit(points: Sequence[SweepPoint], fmt: str, destination: IO[str]) -> None:
    """Write a sweep table as CSV or JSON to an open text stream."""
    if fmt == "csv":
        destination.write(sweep_csv(points))
    elif fmt == "json":
        destination.write(sweep_json(points))
    else:
        raise ValueError(f"unknown format {fmt!r}")
