"""Per-step time estimation for distributed recommender inference and training.

The pipelined policy models the best-case overlap: the index exchange is a
true data dependency and runs first; embedding lookups and the embedding
exchange stream through each other (max of the two, including the exchange
latency); dense forward compute overlaps the whole embedding path. Training
appends an embedding-backward phase (gradient exchange overlapped with the
write-only embedding updates) and a dense phase (backward compute overlapped
with the parameter all-reduce). The sequential policy simply sums all phases.
"""

from __future__ import annotations

from dataclasses import dataclass

from recperf.accounting import PhaseVolumes, message_volumes
from recperf.collectives import cc_time_parts
from recperf.config import (
    CcOp,
    ChipSpec,
    MemoryRole,
    OverlapPolicy,
    RunMode,
    Scenario,
    ShardingKind,
    require_valid,
)
from recperf.memmodel import (
    AccessDirection,
    effective_random_access_bandwidth,
    hybrid_lookup_time,
)

INFERENCE_PHASES = ("idx_exchange", "embed_lookup", "embed_exchange", "dense_fwd_compute")
TRAINING_PHASES = INFERENCE_PHASES + (
    "grad_exchange", "embed_update", "dense_bwd_compute", "dense_allreduce",
)

# Tie-break order for bottleneck labels.
_BOTTLENECKS = ("LatencyBound", "BandwidthBound", "MemoryBound", "ComputeBound")


@dataclass(frozen=True)
class StepEstimate:
    step_time: float                       # seconds per query (one batch)
    qps: float
    samples_per_sec: float
    mem_util: float
    compute_util: float
    allreduce_fraction: float | None       # training only
    bottleneck: str
    breakdown: tuple[tuple[str, float], ...]
    mode: RunMode
    overlap_policy: OverlapPolicy

    def phase(self, name: str) -> float:
        for phase_name, seconds in self.breakdown:
            if phase_name == name:
                return seconds
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "step_time_s": self.step_time,
            "qps": self.qps,
            "samples_per_sec": self.samples_per_sec,
            "mem_util": self.mem_util,
            "compute_util": self.compute_util,
            "allreduce_fraction": self.allreduce_fraction,
            "bottleneck": self.bottleneck,
            "mode": self.mode.value,
            "overlap_policy": self.overlap_policy.value,
            "breakdown": [[name, seconds] for name, seconds in self.breakdown],
        }


@dataclass(frozen=True)
class SlaResult:
    passed: bool
    margin: float  # budget - step_time


def chip_memory_bandwidth(chip: ChipSpec, access_bytes: int,
                          direction: AccessDirection) -> float:
    """Combined effective random-access bandwidth across the chip's memories.

    Embedding traffic is allocated to the fast and bulk systems in proportion
    to their bandwidth (both stream concurrently), so the combined rate is the
    sum; an effective_bw_override pins a system's rate directly.
    """
    total = 0.0
    for mem in chip.memory:
        if mem.effective_bw_override is not None:
            total += mem.effective_bw_override
        else:
            total += effective_random_access_bandwidth(mem.timing, mem.units, access_bytes, direction)
    if total <= 0:
        raise ValueError("chip has zero effective memory bandwidth")
    return total


def _lookup_time(chip: ChipSpec, volume_bytes: float, access_bytes: int,
                 direction: AccessDirection) -> float:
    bws = []
    for mem in chip.memory:
        if mem.effective_bw_override is not None:
            bws.append(mem.effective_bw_override)
        else:
            bws.append(effective_random_access_bandwidth(mem.timing, mem.units, access_bytes, direction))
    if len(bws) == 1:
        return volume_bytes / bws[0]
    # Bandwidth-proportional static allocation equalizes both drain times.
    fast_bw = next(b for b, m in zip(bws, chip.memory) if m.role == MemoryRole.FAST)
    bulk_bw = next(b for b, m in zip(bws, chip.memory) if m.role == MemoryRole.BULK)
    total = fast_bw + bulk_bw
    return hybrid_lookup_time(fast_bw, bulk_bw,
                              volume_bytes * fast_bw / total,
                              volume_bytes * bulk_bw / total)


def _embed_exchange_kind(sharding: ShardingKind) -> CcOp:
    return CcOp.ALL_TO_ALL if sharding == ShardingKind.UNSHARDED else CcOp.REDUCE_SCATTER


def _grad_exchange_kind(sharding: ShardingKind) -> CcOp:
    return CcOp.ALL_TO_ALL if sharding == ShardingKind.UNSHARDED else CcOp.ALL_GATHER


@dataclass(frozen=True)
class _Phases:
    """Phase times plus the latency/wire split needed for composition."""

    idx_lat: float
    idx_wire: float
    lookup: float
    exch_lat: float
    exch_wire: float
    fwd_compute: float
    grad_lat: float = 0.0
    grad_wire: float = 0.0
    update: float = 0.0
    bwd_compute: float = 0.0
    ar_lat: float = 0.0
    ar_wire: float = 0.0


def _phase_times(s: Scenario, volumes: PhaseVolumes) -> _Phases:
    chip = s.system.chip
    n = s.system.num_chips
    e = s.model.embedding_row_bytes
    cc = chip.cc

    idx_lat, idx_wire = cc_time_parts(CcOp.ALL_TO_ALL, volumes.idx_exchange_payload, n, cc)
    exch_lat, exch_wire = cc_time_parts(
        _embed_exchange_kind(s.sharding.kind), volumes.embed_exchange_payload, n, cc)
    lookup = _lookup_time(chip, volumes.lookup_bytes, e, AccessDirection.READ)
    fwd_compute = volumes.fwd_dense_flops / chip.compute_rate

    if s.mode == RunMode.INFERENCE:
        return _Phases(idx_lat, idx_wire, lookup, exch_lat, exch_wire, fwd_compute)

    grad_lat, grad_wire = cc_time_parts(
        _grad_exchange_kind(s.sharding.kind), volumes.grad_exchange_payload, n, cc)
    if volumes.dense_grad_payload > 0:
        ar_lat, ar_wire = cc_time_parts(CcOp.ALL_REDUCE, volumes.dense_grad_payload, n, cc)
    else:
        ar_lat = ar_wire = 0.0  # nothing to reduce; the op is skipped entirely
    return _Phases(
        idx_lat, idx_wire, lookup, exch_lat, exch_wire, fwd_compute,
        grad_lat=grad_lat, grad_wire=grad_wire,
        update=_lookup_time(chip, volumes.embed_write_bytes, e, AccessDirection.WRITE),
        bwd_compute=volumes.bwd_dense_flops / chip.compute_rate,
        ar_lat=ar_lat, ar_wire=ar_wire,
    )


def _compose_forward(p: _Phases, policy: OverlapPolicy) -> float:
    idx = p.idx_lat + p.idx_wire
    exch = p.exch_lat + p.exch_wire
    if policy == OverlapPolicy.SEQUENTIAL:
        return idx + p.lookup + exch + p.fwd_compute
    return max(idx + max(p.lookup, exch), p.fwd_compute)


def _compose_step(p: _Phases, mode: RunMode, policy: OverlapPolicy) -> float:
    fwd = _compose_forward(p, policy)
    if mode == RunMode.INFERENCE:
        return fwd
    if policy == OverlapPolicy.SEQUENTIAL:
        return fwd + p.grad_lat + p.grad_wire + p.update + p.bwd_compute + p.ar_lat + p.ar_wire
    embed_bwd = p.grad_lat + max(p.grad_wire, p.update)
    dense = max(p.bwd_compute, p.ar_lat + p.ar_wire)
    return fwd + embed_bwd + dense


def _bottleneck(p: _Phases, mode: RunMode) -> str:
    latency = p.idx_lat + p.exch_lat
    wire = p.idx_wire + p.exch_wire
    memory = p.lookup
    compute = p.fwd_compute
    if mode == RunMode.TRAINING:
        latency += p.grad_lat + p.ar_lat
        wire += p.grad_wire + p.ar_wire
        memory += p.update
        compute += p.bwd_compute
    terms = dict(zip(_BOTTLENECKS, (latency, wire, memory, compute)))
    best = max(terms.values())
    for label in _BOTTLENECKS:  # declared order breaks ties
        if terms[label] == best:
            return label
    raise AssertionError("unreachable")


def _estimate(s: Scenario) -> StepEstimate:
    require_valid(s)
    volumes = message_volumes(s)
    p = _phase_times(s, volumes)
    step_time = _compose_step(p, s.mode, s.overlap_policy)

    breakdown = [
        ("idx_exchange", p.idx_lat + p.idx_wire),
        ("embed_lookup", p.lookup),
        ("embed_exchange", p.exch_lat + p.exch_wire),
        ("dense_fwd_compute", p.fwd_compute),
    ]
    mem_time = p.lookup
    compute_time = p.fwd_compute
    allreduce_fraction = None
    if s.mode == RunMode.TRAINING:
        allreduce_time = p.ar_lat + p.ar_wire
        breakdown += [
            ("grad_exchange", p.grad_lat + p.grad_wire),
            ("embed_update", p.update),
            ("dense_bwd_compute", p.bwd_compute),
            ("dense_allreduce", allreduce_time),
        ]
        mem_time += p.update
        compute_time += p.bwd_compute
        allreduce_fraction = allreduce_time / step_time

    qps = 1.0 / step_time
    return StepEstimate(
        step_time=step_time,
        qps=qps,
        samples_per_sec=s.model.batch_size * qps,
        mem_util=mem_time / step_time,
        compute_util=compute_time / step_time,
        allreduce_fraction=allreduce_fraction,
        bottleneck=_bottleneck(p, s.mode),
        breakdown=tuple(breakdown),
        mode=s.mode,
        overlap_policy=s.overlap_policy,
    )


def inference_step(s: Scenario) -> StepEstimate:
    if s.mode != RunMode.INFERENCE:
        raise ValueError("scenario mode must be inference")
    return _estimate(s)


def training_step(s: Scenario) -> StepEstimate:
    if s.mode != RunMode.TRAINING:
        raise ValueError("scenario mode must be training")
    return _estimate(s)


def estimate_step(s: Scenario) -> StepEstimate:
    return _estimate(s)


def recompose(estimate: StepEstimate, s: Scenario) -> float:
    """Rebuild step_time from the phase breakdown (exactness check).

    Under the sequential policy the phases sum; under the pipelined policy the
    stated max-composition is applied, pulling the exchange-op latencies from
    the scenario's interconnect spec.
    """
    phases = dict(estimate.breakdown)
    if estimate.overlap_policy == OverlapPolicy.SEQUENTIAL:
        return sum(phases.values())
    fwd = max(
        phases["idx_exchange"] + max(phases["embed_lookup"], phases["embed_exchange"]),
        phases["dense_fwd_compute"],
    )
    if estimate.mode == RunMode.INFERENCE:
        return fwd
    cc = s.system.chip.cc
    n = s.system.num_chips
    grad_lat = 0.0
    if n > 1:
        grad_lat = cc.latency(_grad_exchange_kind(s.sharding.kind))
        if cc.topology.value == "switched_all_to_all":
            grad_lat += cc.switch_traversal_latency
    embed_bwd = max(phases["grad_exchange"], grad_lat + phases["embed_update"])
    dense = max(phases["dense_bwd_compute"], phases["dense_allreduce"])
    return fwd + embed_bwd + dense


def sla_check(estimate: StepEstimate, percentile: float, budget: float) -> SlaResult:
    """Latency-SLA check against the inverse-CDF constraint.

    The model's per-query latency is a deterministic upper bound, so the
    percentile point function is the step time at every percentile.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if not (0 < percentile <= 1):
        raise ValueError("percentile must be in (0, 1]")
    return SlaResult(passed=estimate.step_time <= budget, margin=budget - estimate.step_time)
