"""Latency/bandwidth cost model for collective communications.

Wire volumes are the per-processor lower bounds: (n-1)/n of the input payload
for all-to-all and reduce-scatter, twice that for all-reduce, and (n-1) full
payloads for all-gather. `payload` is always the per-processor input volume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from recperf.config import CcOp, CcSpec, CcTopology


class CalibrationError(ValueError):
    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CalibrationSample:
    payload_bytes: float
    measured_time: float


@dataclass(frozen=True)
class CalibrationFit:
    latency: float       # seconds
    bandwidth: float     # bytes/s
    residual: float      # RMS seconds
    clamped: bool = False  # set when a negative intercept was clamped to zero


def wire_bytes_per_proc(kind: CcOp, payload: float, n: int) -> float:
    """Lower-bound bytes sent (and received) by each processor."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if payload < 0:
        raise ValueError("payload must be >= 0")
    if n == 1:
        return 0.0
    if kind in (CcOp.ALL_TO_ALL, CcOp.REDUCE_SCATTER):
        return payload * (n - 1) / n
    if kind == CcOp.ALL_REDUCE:
        return 2 * payload * (n - 1) / n
    if kind == CcOp.ALL_GATHER:
        return payload * (n - 1)
    raise ValueError(f"unknown CC op kind: {kind}")


def topology_adjusted_wire_bytes(
    kind: CcOp, wire_bytes: float, n: int, topology: CcTopology,
    ring_all_to_all_multiplier: float | None = None,
) -> float:
    """Extra wire volume imposed by the interconnect topology.

    A bidirectional ring pays the mean hop count (n/4 by default) on
    all-to-all; the other kinds have ring-optimal algorithms. Point-to-point
    and switched fabrics deliver the lower bound directly.
    """
    if topology == CcTopology.RING and kind == CcOp.ALL_TO_ALL:
        multiplier = ring_all_to_all_multiplier if ring_all_to_all_multiplier is not None else n / 4
        return wire_bytes * multiplier
    return wire_bytes


def cc_time_parts(kind: CcOp, payload: float, n: int, spec: CcSpec) -> tuple[float, float]:
    """(latency seconds, wire-transfer seconds) for one collective invocation."""
    if n == 1:
        return 0.0, 0.0
    wire = topology_adjusted_wire_bytes(
        kind, wire_bytes_per_proc(kind, payload, n), n, spec.topology,
        spec.ring_all_to_all_multiplier,
    )
    latency = spec.latency(kind)
    if spec.topology == CcTopology.SWITCHED_ALL_TO_ALL:
        latency += spec.switch_traversal_latency
    return latency, wire / (spec.per_chip_bandwidth * spec.link_efficiency)


def cc_time(kind: CcOp, payload: float, n: int, spec: CcSpec) -> float:
    """Latency is charged once per invocation, not per hop."""
    latency, transfer = cc_time_parts(kind, payload, n, spec)
    return latency + transfer


def fit_latency_bandwidth(samples: list[CalibrationSample]) -> CalibrationFit:
    """Ordinary least squares of measured time on payload size.

    The slope recovers 1/bandwidth and the intercept the fixed latency. A
    negative intercept is clamped to zero and flagged.
    """
    if len(samples) < 2:
        raise CalibrationError("need at least 2 samples", code="DEGENERATE_SAMPLES")
    payloads = np.array([s.payload_bytes for s in samples], dtype=float)
    times = np.array([s.measured_time for s in samples], dtype=float)
    if np.all(payloads == payloads[0]):
        raise CalibrationError("all payloads are equal; slope is undetermined", code="DEGENERATE_SAMPLES")
    slope, intercept = np.polyfit(payloads, times, 1)
    if slope <= 0:
        raise CalibrationError(f"fitted slope {slope:g} is not positive", code="NONPOSITIVE_SLOPE")
    clamped = bool(intercept < 0)
    latency = max(0.0, float(intercept))
    residual = float(np.sqrt(np.mean((times - (slope * payloads + intercept)) ** 2)))
    return CalibrationFit(latency=latency, bandwidth=1.0 / float(slope), residual=residual, clamped=clamped)


def read_samples_csv(text: str) -> list[CalibrationSample]:
    """Parse a two-column CSV (payload_bytes, seconds); a header row is allowed."""
    samples = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2:
            raise CalibrationError(f"line {line_no}: expected two columns", code="BAD_SAMPLE_ROW")
        try:
            payload, seconds = float(parts[0]), float(parts[1])
        except ValueError:
            if line_no == 1:
                continue  # header
            raise CalibrationError(f"line {line_no}: non-numeric sample", code="BAD_SAMPLE_ROW")
        if payload <= 0 or seconds <= 0:
            raise CalibrationError(f"line {line_no}: samples must be positive", code="BAD_SAMPLE_ROW")
        samples.append(CalibrationSample(payload_bytes=payload, measured_time=seconds))
    return samples
