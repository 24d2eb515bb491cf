"""DRAM random-access bandwidth and capacity model.

Effective bandwidth for scattered embedding-sized accesses is limited by the
activate command rate (tRRD, tFAW, tRC across banks) rather than the pin rate,
assuming auto-precharge and one activate per access. Timing presets carry
representative datasheet values and can be overridden field by field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from recperf.config import SystemSpec


class AccessDirection(str, Enum):
    READ = "read"
    WRITE = "write"


class RowOverflowError(ValueError):
    """Access larger than a DRAM row; the one-activate-per-access model breaks."""

    code = "ROW_OVERFLOW"


@dataclass(frozen=True)
class DramTimingSpec:
    name: str
    data_rate: float            # transfers/s per pin
    channel_width_bits: int
    burst_length: int           # transfers per burst
    banks_per_channel: int
    tRC: float                  # s, row cycle
    tRRD: float                 # s, activate-to-activate (short bank-group value)
    tFAW: float                 # s, four-activate window
    channels_per_unit: int      # channels per stack / per DIMM channel group
    row_bytes: int = 1024       # row size bound for the one-activate model

    def check(self) -> None:
        numeric = {
            "data_rate": self.data_rate,
            "channel_width_bits": self.channel_width_bits,
            "burst_length": self.burst_length,
            "banks_per_channel": self.banks_per_channel,
            "tRC": self.tRC,
            "tRRD": self.tRRD,
            "tFAW": self.tFAW,
            "channels_per_unit": self.channels_per_unit,
            "row_bytes": self.row_bytes,
        }
        for field, value in numeric.items():
            if value <= 0:
                raise ValueError(f"{self.name}: {field} must be positive")
        if self.tFAW < self.tRRD:
            raise ValueError(f"{self.name}: tFAW must be >= tRRD")
        if self.tRC < self.tRRD:
            raise ValueError(f"{self.name}: tRC must be >= tRRD")


# Representative public-datasheet values. Absolute effective-bandwidth figures
# depend on the exact speed grade and page size; every field is override-able
# via `replace` or an inline timing mapping in a scenario file.
TIMING_PRESETS: dict[str, DramTimingSpec] = {
    # 64-bit channel, x8 devices, 1KB effective page. tRRD_S/tFAW for 3200AA.
    "DDR4-3200": DramTimingSpec(
        name="DDR4-3200", data_rate=3.2e9, channel_width_bits=64, burst_length=8,
        banks_per_channel=16, tRC=45.75e-9, tRRD=5.3e-9, tFAW=21.25e-9,
        channels_per_unit=1, row_bytes=8192,
    ),
    # Per-chip x32 channel.
    "GDDR6-14000": DramTimingSpec(
        name="GDDR6-14000", data_rate=14e9, channel_width_bits=32, burst_length=16,
        banks_per_channel=16, tRC=46e-9, tRRD=5.5e-9, tFAW=22e-9,
        channels_per_unit=1, row_bytes=2048,
    ),
    # 8 legacy 128-bit channels per stack, 16 banks (8Gb generation).
    "HBM2-2300": DramTimingSpec(
        name="HBM2-2300", data_rate=2.3e9, channel_width_bits=128, burst_length=4,
        banks_per_channel=16, tRC=45e-9, tRRD=4e-9, tFAW=16e-9,
        channels_per_unit=8, row_bytes=1024,
    ),
    "HBM2-2430": DramTimingSpec(
        name="HBM2-2430", data_rate=2.43e9, channel_width_bits=128, burst_length=4,
        banks_per_channel=16, tRC=45e-9, tRRD=4e-9, tFAW=16e-9,
        channels_per_unit=8, row_bytes=1024,
    ),
    # 16Gb HBM2E dies: 32 banks per channel, tighter activate spacing.
    "HBM2E-2400": DramTimingSpec(
        name="HBM2E-2400", data_rate=2.4e9, channel_width_bits=128, burst_length=4,
        banks_per_channel=32, tRC=45e-9, tRRD=2e-9, tFAW=10e-9,
        channels_per_unit=8, row_bytes=1024,
    ),
    "HBM2E-3000": DramTimingSpec(
        name="HBM2E-3000", data_rate=3.0e9, channel_width_bits=128, burst_length=4,
        banks_per_channel=32, tRC=45e-9, tRRD=2e-9, tFAW=10e-9,
        channels_per_unit=8, row_bytes=1024,
    ),
}


def timing_preset(name: str, **overrides) -> DramTimingSpec:
    if name not in TIMING_PRESETS:
        raise KeyError(f"unknown DRAM timing preset: {name!r}")
    spec = TIMING_PRESETS[name]
    return replace(spec, **overrides) if overrides else spec


def pin_bandwidth(timing: DramTimingSpec, units: int) -> float:
    """Peak sequential bandwidth in bytes/s across `units` stacks or channels."""
    timing.check()
    if units <= 0:
        raise ValueError("units must be positive")
    return units * timing.channels_per_unit * (timing.channel_width_bits / 8) * timing.data_rate


def activate_interval(timing: DramTimingSpec) -> float:
    """Minimum sustainable spacing between activates on one channel."""
    return max(timing.tRRD, timing.tFAW / 4, timing.tRC / timing.banks_per_channel)


def effective_random_access_bandwidth(
    timing: DramTimingSpec,
    units: int,
    access_bytes: int,
    direction: AccessDirection = AccessDirection.READ,
) -> float:
    """Sustainable bytes/s for scattered `access_bytes`-sized accesses.

    Each access opens one row (auto-precharge), so throughput per channel is
    access_bytes / max(data transfer time, activate interval), capped at the
    pin rate. Writes use the read schedule; tWR effects are second order for
    the tRC-dominated auto-precharge pattern modeled here.
    """
    timing.check()
    if units <= 0:
        raise ValueError("units must be positive")
    if access_bytes < 1:
        raise ValueError("access_bytes must be >= 1")
    if access_bytes > timing.row_bytes:
        raise RowOverflowError(
            f"{access_bytes}B access exceeds {timing.row_bytes}B row ({timing.name})"
        )
    bytes_per_burst = (timing.channel_width_bits / 8) * timing.burst_length
    bursts = math.ceil(access_bytes / bytes_per_burst)
    data_time = bursts * timing.burst_length / timing.data_rate
    per_access = max(data_time, activate_interval(timing))
    per_channel = access_bytes / per_access
    total = per_channel * timing.channels_per_unit * units
    return min(total, pin_bandwidth(timing, units))


@dataclass(frozen=True)
class CapacitySummary:
    total_bytes: float
    fast_bytes: float
    bulk_bytes: float

    @property
    def fast_fraction(self) -> float:
        return self.fast_bytes / self.total_bytes if self.total_bytes else 0.0


def capacity_summary(system: "SystemSpec") -> CapacitySummary:
    """Sum memory capacity across all chips, split by Fast/Bulk role."""
    from recperf.config import MemoryRole

    fast = 0.0
    bulk = 0.0
    for mem in system.chip.memory:
        if mem.role == MemoryRole.FAST:
            fast += mem.capacity_bytes
        else:
            bulk += mem.capacity_bytes
    fast *= system.num_chips
    bulk *= system.num_chips
    return CapacitySummary(total_bytes=fast + bulk, fast_bytes=fast, bulk_bytes=bulk)


def hybrid_lookup_time(
    fast_bw: float, bulk_bw: float, fast_bytes: float, bulk_bytes: float
) -> float:
    """Time to stream lookups split across two concurrently-operating memories."""
    if fast_bw <= 0 or bulk_bw <= 0:
        raise ValueError("bandwidths must be positive")
    return max(fast_bytes / fast_bw, bulk_bytes / bulk_bw)


def bandwidth_curve_rows(
    preset_names: list[str] | None = None,
    units: int = 1,
    access_sizes: list[int] | None = None,
) -> list[dict]:
    """Bandwidth-vs-access-size data for the preset catalog (CSV emission)."""
    names = preset_names or sorted(TIMING_PRESETS)
    sizes = access_sizes or [32, 64, 128, 256, 512]
    rows = []
    for name in names:
        timing = timing_preset(name)
        for size in sizes:
            if size > timing.row_bytes:
                continue
            rows.append(
                {
                    "preset": name,
                    "access_bytes": size,
                    "effective_Bps": effective_random_access_bandwidth(timing, units, size),
                    "pin_Bps": pin_bandwidth(timing, units),
                }
            )
    return rows
