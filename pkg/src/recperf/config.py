"""Experiment inputs: model configurations, hardware systems, scenarios.

All quantities are stored in SI base units (bytes, seconds, FLOP/s, bytes/s).
Scenario documents are YAML; any of the `model` / `system` sections may name a
catalog preset instead of spelling out the fields. See README for the format.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Mapping

import yaml

from recperf.memmodel import DramTimingSpec, timing_preset


class ConfigError(ValueError):
    """Malformed or unresolvable scenario document."""

    def __init__(self, message: str, code: str = "CONFIG_ERROR"):
        super().__init__(message)
        self.code = code


class CcOp(str, Enum):
    ALL_TO_ALL = "all_to_all"
    ALL_REDUCE = "all_reduce"
    REDUCE_SCATTER = "reduce_scatter"
    ALL_GATHER = "all_gather"


class CcTopology(str, Enum):
    QUADRATIC_POINT_TO_POINT = "quadratic_point_to_point"
    SWITCHED_ALL_TO_ALL = "switched_all_to_all"
    RING = "ring"


class MemoryKind(str, Enum):
    DDR4 = "DDR4"
    GDDR6 = "GDDR6"
    HBM2 = "HBM2"
    HBM2E = "HBM2E"


class MemoryRole(str, Enum):
    FAST = "fast"
    BULK = "bulk"


class ShardingKind(str, Enum):
    UNSHARDED = "unsharded"
    FULLY_SHARDED = "fully_sharded"


class RunMode(str, Enum):
    INFERENCE = "inference"
    TRAINING = "training"


class OverlapPolicy(str, Enum):
    PIPELINED = "pipelined"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class ModelConfig:
    num_dense_features: int
    num_tables: int
    lookups_per_table: int
    embedding_dim: int
    bottom_mlp_layers: tuple[int, ...]
    top_mlp_layers: tuple[int, ...]
    batch_size: int
    element_bytes: int = 2
    # The source material never states the index width; 4 bytes is the only
    # value consistent with the quoted 320KB per-processor index volume.
    index_bytes: int = 4
    table_cardinalities: tuple[int, ...] | None = None
    name: str = ""

    @property
    def embedding_row_bytes(self) -> int:
        return self.embedding_dim * self.element_bytes


@dataclass(frozen=True)
class ShardingMode:
    kind: ShardingKind
    assume_balanced: bool = True


@dataclass(frozen=True)
class CcSpec:
    topology: CcTopology
    per_chip_bandwidth: float           # bytes/s each direction
    link_efficiency: float              # (0, 1]
    latency_by_op: Mapping[CcOp, float]  # seconds per op kind
    switch_traversal_latency: float = 0.0
    # Ring all-to-all wire multiplier; defaults to mean hop count n/4.
    ring_all_to_all_multiplier: float | None = None

    def latency(self, kind: CcOp) -> float:
        return self.latency_by_op[kind]


@dataclass(frozen=True)
class MemorySystemSpec:
    kind: MemoryKind
    units: int
    timing: DramTimingSpec
    capacity_bytes: float
    role: MemoryRole = MemoryRole.FAST
    effective_bw_override: float | None = None  # bypasses the timing model


@dataclass(frozen=True)
class ChipSpec:
    compute_rate: float                 # FLOP/s at model precision
    memory: tuple[MemorySystemSpec, ...]
    cc: CcSpec
    onchip_buffer_bytes: float | None = None  # absent = assumed sufficient


@dataclass(frozen=True)
class SystemSpec:
    num_chips: int
    chip: ChipSpec
    name: str = ""


@dataclass(frozen=True)
class Scenario:
    model: ModelConfig
    system: SystemSpec
    sharding: ShardingMode
    mode: RunMode = RunMode.INFERENCE
    overlap_policy: OverlapPolicy = OverlapPolicy.PIPELINED


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_model(m: ModelConfig) -> list[ValidationIssue]:
    issues = []

    def positive(value, label):
        if value <= 0:
            issues.append(ValidationIssue("COUNT_POSITIVE", f"{label} must be positive, got {value}"))

    positive(m.num_dense_features, "num_dense_features")
    positive(m.num_tables, "num_tables")
    positive(m.lookups_per_table, "lookups_per_table")
    positive(m.embedding_dim, "embedding_dim")
    positive(m.batch_size, "batch_size")
    if m.element_bytes not in (1, 2, 4):
        issues.append(ValidationIssue("ELEMENT_BYTES_INVALID", f"element_bytes must be 1, 2 or 4, got {m.element_bytes}"))
    if m.index_bytes not in (2, 4, 8):
        issues.append(ValidationIssue("INDEX_BYTES_INVALID", f"index_bytes must be 2, 4 or 8, got {m.index_bytes}"))
    if not m.bottom_mlp_layers or not m.top_mlp_layers:
        issues.append(ValidationIssue("MLP_EMPTY", "bottom and top MLPs need at least one layer"))
        return issues
    if any(w <= 0 for w in m.bottom_mlp_layers + m.top_mlp_layers):
        issues.append(ValidationIssue("COUNT_POSITIVE", "MLP layer widths must be positive"))
    if m.bottom_mlp_layers[-1] != m.embedding_dim:
        issues.append(ValidationIssue(
            "MLP_DIM_MISMATCH",
            f"last bottom-MLP width {m.bottom_mlp_layers[-1]} must equal embedding_dim {m.embedding_dim}",
        ))
    if m.top_mlp_layers[-1] != 1:
        issues.append(ValidationIssue("TOP_MLP_OUTPUT", "last top-MLP width must be 1 (click probability)"))
    if m.table_cardinalities is not None:
        if len(m.table_cardinalities) != m.num_tables:
            issues.append(ValidationIssue("CARDINALITY_COUNT", "table_cardinalities length must equal num_tables"))
        elif any(c <= 0 for c in m.table_cardinalities):
            issues.append(ValidationIssue("COUNT_POSITIVE", "table cardinalities must be positive"))
    return issues


def validate_system(s: SystemSpec) -> list[ValidationIssue]:
    issues = []
    if s.num_chips < 1:
        issues.append(ValidationIssue("NUM_CHIPS_POSITIVE", f"num_chips must be >= 1, got {s.num_chips}"))
    chip = s.chip
    if chip.compute_rate <= 0:
        issues.append(ValidationIssue("COMPUTE_RATE_POSITIVE", "compute_rate must be positive"))
    if not chip.memory:
        issues.append(ValidationIssue("NO_MEMORY", "chip needs at least one memory system"))
    roles = [m.role for m in chip.memory]
    for role in (MemoryRole.FAST, MemoryRole.BULK):
        if roles.count(role) > 1:
            issues.append(ValidationIssue("MEMORY_ROLE_DUP", f"more than one {role.value} memory system"))
    for mem in chip.memory:
        if mem.units <= 0:
            issues.append(ValidationIssue("UNITS_POSITIVE", f"{mem.kind.value}: units must be positive"))
        if mem.capacity_bytes <= 0:
            issues.append(ValidationIssue("CAPACITY_POSITIVE", f"{mem.kind.value}: capacity must be positive"))
        if mem.effective_bw_override is not None and mem.effective_bw_override <= 0:
            issues.append(ValidationIssue("BW_OVERRIDE_POSITIVE", f"{mem.kind.value}: bandwidth override must be positive"))
        try:
            mem.timing.check()
        except ValueError as exc:
            issues.append(ValidationIssue("TIMING_INVALID", str(exc)))
    cc = chip.cc
    if cc.per_chip_bandwidth <= 0:
        issues.append(ValidationIssue("BANDWIDTH_POSITIVE", "per_chip_bandwidth must be positive"))
    if not (0 < cc.link_efficiency <= 1):
        issues.append(ValidationIssue("EFFICIENCY_RANGE", f"link_efficiency must be in (0, 1], got {cc.link_efficiency}"))
    for kind in CcOp:
        if kind not in cc.latency_by_op:
            issues.append(ValidationIssue("LATENCY_MISSING", f"no latency for {kind.value}"))
        elif cc.latency_by_op[kind] < 0:
            issues.append(ValidationIssue("LATENCY_NEGATIVE", f"{kind.value} latency must be >= 0"))
    if cc.switch_traversal_latency < 0:
        issues.append(ValidationIssue("LATENCY_NEGATIVE", "switch_traversal_latency must be >= 0"))
    return issues


def validate(scenario: Scenario) -> list[ValidationIssue]:
    """Full validation report; an empty list means the scenario is valid."""
    return validate_model(scenario.model) + validate_system(scenario.system)


def require_valid(scenario: Scenario) -> Scenario:
    issues = validate(scenario)
    if issues:
        detail = "; ".join(f"{i.code}: {i.message}" for i in issues)
        raise ConfigError(f"invalid scenario: {detail}", code=issues[0].code)
    return scenario


# ---------------------------------------------------------------------------
# Preset catalog
# ---------------------------------------------------------------------------

def _uniform_latency(seconds: float) -> dict[CcOp, float]:
    return {kind: seconds for kind in CcOp}


MODEL_PRESETS: dict[str, ModelConfig] = {
    # Small batch / small embeddings: b=200, 64B rows.
    "dlrm-rm2-small": ModelConfig(
        name="dlrm-rm2-small",
        num_dense_features=256, num_tables=40, lookups_per_table=80,
        embedding_dim=32, bottom_mlp_layers=(256, 128, 32, 32),
        top_mlp_layers=(512, 128, 1), batch_size=200,
    ),
    # Large batch / large embeddings: b=600, 256B rows.
    "dlrm-rm2-large": ModelConfig(
        name="dlrm-rm2-large",
        num_dense_features=256, num_tables=40, lookups_per_table=80,
        embedding_dim=128, bottom_mlp_layers=(256, 128, 32, 128),
        top_mlp_layers=(512, 128, 1), batch_size=600,
    ),
}


SYSTEM_PRESETS: dict[str, SystemSpec] = {
    # 8-chip reference system used for latency/bandwidth sweeps.
    "ref8-homogeneous": SystemSpec(
        name="ref8-homogeneous",
        num_chips=8,
        chip=ChipSpec(
            compute_rate=200e12,
            memory=(
                MemorySystemSpec(
                    kind=MemoryKind.HBM2E, units=6, timing=timing_preset("HBM2E-2400"),
                    capacity_bytes=96e9, role=MemoryRole.FAST,
                ),
            ),
            cc=CcSpec(
                topology=CcTopology.QUADRATIC_POINT_TO_POINT,
                per_chip_bandwidth=1000e9, link_efficiency=1.0,
                latency_by_op=_uniform_latency(1e-6),
            ),
        ),
    ),
    # 16-chip scale-in target: HBM2E fast tier plus a DDR4 bulk tier.
    "recspeed16": SystemSpec(
        name="recspeed16",
        num_chips=16,
        chip=ChipSpec(
            compute_rate=200e12,
            memory=(
                MemorySystemSpec(
                    kind=MemoryKind.HBM2E, units=6, timing=timing_preset("HBM2E-3000"),
                    capacity_bytes=96e9, role=MemoryRole.FAST,
                ),
                MemorySystemSpec(
                    kind=MemoryKind.DDR4, units=1, timing=timing_preset("DDR4-3200"),
                    capacity_bytes=256e9, role=MemoryRole.BULK,
                ),
            ),
            cc=CcSpec(
                topology=CcTopology.QUADRATIC_POINT_TO_POINT,
                per_chip_bandwidth=1000e9, link_efficiency=1.0,
                latency_by_op=_uniform_latency(1e-6),
            ),
        ),
    ),
    # 16x V100 with NVSwitch fabric. Measured latencies include switch and SW
    # overhead, so switch_traversal_latency carries nothing extra. The
    # all-to-all and reduce-scatter latencies are taken equal to all-gather
    # (derived the same way); both are override-able.
    "dgx2": SystemSpec(
        name="dgx2",
        num_chips=16,
        chip=ChipSpec(
            compute_rate=125e12,
            memory=(
                MemorySystemSpec(
                    kind=MemoryKind.HBM2, units=4, timing=timing_preset("HBM2-2300"),
                    capacity_bytes=32e9, role=MemoryRole.FAST,
                ),
            ),
            cc=CcSpec(
                topology=CcTopology.SWITCHED_ALL_TO_ALL,
                per_chip_bandwidth=150e9, link_efficiency=0.79,
                latency_by_op={
                    CcOp.ALL_REDUCE: 50e-6,
                    CcOp.ALL_GATHER: 100e-6,
                    CcOp.ALL_TO_ALL: 100e-6,
                    CcOp.REDUCE_SCATTER: 100e-6,
                },
                switch_traversal_latency=0.0,
            ),
        ),
    ),
}


def preset(name: str) -> ModelConfig | SystemSpec:
    """Look up a catalog entry by name."""
    if name in MODEL_PRESETS:
        return MODEL_PRESETS[name]
    if name in SYSTEM_PRESETS:
        return SYSTEM_PRESETS[name]
    known = sorted(list(MODEL_PRESETS) + list(SYSTEM_PRESETS))
    raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(known)}", code="UNKNOWN_PRESET")


def preset_names() -> dict[str, list[str]]:
    return {"models": sorted(MODEL_PRESETS), "systems": sorted(SYSTEM_PRESETS)}


# ---------------------------------------------------------------------------
# Document loading / serialization
# ---------------------------------------------------------------------------

def _need(mapping: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"missing required field {key!r} in {where}", code="MISSING_FIELD")
    return mapping[key]


def _model_from_mapping(doc: Mapping[str, Any]) -> ModelConfig:
    cards = doc.get("table_cardinalities")
    return ModelConfig(
        num_dense_features=_need(doc, "num_dense_features", "model"),
        num_tables=_need(doc, "num_tables", "model"),
        lookups_per_table=_need(doc, "lookups_per_table", "model"),
        embedding_dim=_need(doc, "embedding_dim", "model"),
        bottom_mlp_layers=tuple(_need(doc, "bottom_mlp_layers", "model")),
        top_mlp_layers=tuple(_need(doc, "top_mlp_layers", "model")),
        batch_size=_need(doc, "batch_size", "model"),
        element_bytes=doc.get("element_bytes", 2),
        index_bytes=doc.get("index_bytes", 4),
        table_cardinalities=tuple(cards) if cards is not None else None,
        name=doc.get("name", ""),
    )


def _timing_from_value(value: Any) -> DramTimingSpec:
    if isinstance(value, str):
        try:
            return timing_preset(value)
        except KeyError as exc:
            raise ConfigError(str(exc), code="UNKNOWN_PRESET") from exc
    if isinstance(value, Mapping):
        return DramTimingSpec(**value)
    raise ConfigError("timing must be a preset name or a mapping", code="INVALID_FIELD")


def _memory_from_mapping(doc: Mapping[str, Any]) -> MemorySystemSpec:
    return MemorySystemSpec(
        kind=MemoryKind(_need(doc, "kind", "memory")),
        units=_need(doc, "units", "memory"),
        timing=_timing_from_value(_need(doc, "timing", "memory")),
        capacity_bytes=float(_need(doc, "capacity_bytes", "memory")),
        role=MemoryRole(doc.get("role", "fast")),
        effective_bw_override=doc.get("effective_bw_override"),
    )


def _cc_from_mapping(doc: Mapping[str, Any]) -> CcSpec:
    raw_lat = _need(doc, "latency_by_op", "cc")
    if isinstance(raw_lat, (int, float)):
        latency = _uniform_latency(float(raw_lat))
    else:
        latency = {CcOp(k): float(v) for k, v in raw_lat.items()}
    return CcSpec(
        topology=CcTopology(_need(doc, "topology", "cc")),
        per_chip_bandwidth=float(_need(doc, "per_chip_bandwidth", "cc")),
        link_efficiency=float(doc.get("link_efficiency", 1.0)),
        latency_by_op=latency,
        switch_traversal_latency=float(doc.get("switch_traversal_latency", 0.0)),
        ring_all_to_all_multiplier=doc.get("ring_all_to_all_multiplier"),
    )


def _system_from_mapping(doc: Mapping[str, Any]) -> SystemSpec:
    chip_doc = _need(doc, "chip", "system")
    chip = ChipSpec(
        compute_rate=float(_need(chip_doc, "compute_rate", "chip")),
        memory=tuple(_memory_from_mapping(m) for m in _need(chip_doc, "memory", "chip")),
        cc=_cc_from_mapping(_need(chip_doc, "cc", "chip")),
        onchip_buffer_bytes=chip_doc.get("onchip_buffer_bytes"),
    )
    return SystemSpec(num_chips=_need(doc, "num_chips", "system"), chip=chip, name=doc.get("name", ""))


def _resolve_model(value: Any) -> ModelConfig:
    if isinstance(value, str):
        entry = preset(value)
        if not isinstance(entry, ModelConfig):
            raise ConfigError(f"preset {value!r} is not a model", code="INVALID_FIELD")
        return entry
    if isinstance(value, Mapping):
        return _model_from_mapping(value)
    raise ConfigError("model must be a preset name or a mapping", code="INVALID_FIELD")


def _resolve_system(value: Any) -> SystemSpec:
    if isinstance(value, str):
        entry = preset(value)
        if not isinstance(entry, SystemSpec):
            raise ConfigError(f"preset {value!r} is not a system", code="INVALID_FIELD")
        return entry
    if isinstance(value, Mapping):
        return _system_from_mapping(value)
    raise ConfigError("system must be a preset name or a mapping", code="INVALID_FIELD")


def load_scenario(text: str) -> Scenario:
    """Parse a YAML scenario document, expand presets, and validate."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario document is not valid YAML: {exc}", code="SYNTAX_ERROR") from exc
    if not isinstance(doc, Mapping):
        raise ConfigError("scenario document must be a mapping", code="SYNTAX_ERROR")
    scenario = Scenario(
        model=_resolve_model(_need(doc, "model", "scenario")),
        system=_resolve_system(_need(doc, "system", "scenario")),
        sharding=ShardingMode(
            kind=ShardingKind(doc.get("sharding", "unsharded")),
            assume_balanced=bool(doc.get("assume_balanced", True)),
        ),
        mode=RunMode(doc.get("mode", "inference")),
        overlap_policy=OverlapPolicy(doc.get("overlap", "pipelined")),
    )
    return require_valid(scenario)


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical (fully expanded) mapping form of a scenario."""
    def timing_dict(t: DramTimingSpec) -> dict:
        return {
            "name": t.name, "data_rate": t.data_rate,
            "channel_width_bits": t.channel_width_bits, "burst_length": t.burst_length,
            "banks_per_channel": t.banks_per_channel, "tRC": t.tRC, "tRRD": t.tRRD,
            "tFAW": t.tFAW, "channels_per_unit": t.channels_per_unit, "row_bytes": t.row_bytes,
        }

    model = {
        "name": s.model.name,
        "num_dense_features": s.model.num_dense_features,
        "num_tables": s.model.num_tables,
        "lookups_per_table": s.model.lookups_per_table,
        "embedding_dim": s.model.embedding_dim,
        "bottom_mlp_layers": list(s.model.bottom_mlp_layers),
        "top_mlp_layers": list(s.model.top_mlp_layers),
        "batch_size": s.model.batch_size,
        "element_bytes": s.model.element_bytes,
        "index_bytes": s.model.index_bytes,
    }
    if s.model.table_cardinalities is not None:
        model["table_cardinalities"] = list(s.model.table_cardinalities)
    chip = s.system.chip
    system = {
        "name": s.system.name,
        "num_chips": s.system.num_chips,
        "chip": {
            "compute_rate": chip.compute_rate,
            "memory": [
                {
                    "kind": m.kind.value, "units": m.units, "timing": timing_dict(m.timing),
                    "capacity_bytes": m.capacity_bytes, "role": m.role.value,
                    **({"effective_bw_override": m.effective_bw_override}
                       if m.effective_bw_override is not None else {}),
                }
                for m in chip.memory
            ],
            "cc": {
                "topology": chip.cc.topology.value,
                "per_chip_bandwidth": chip.cc.per_chip_bandwidth,
                "link_efficiency": chip.cc.link_efficiency,
                "latency_by_op": {k.value: v for k, v in chip.cc.latency_by_op.items()},
                "switch_traversal_latency": chip.cc.switch_traversal_latency,
                **({"ring_all_to_all_multiplier": chip.cc.ring_all_to_all_multiplier}
                   if chip.cc.ring_all_to_all_multiplier is not None else {}),
            },
            **({"onchip_buffer_bytes": chip.onchip_buffer_bytes}
               if chip.onchip_buffer_bytes is not None else {}),
        },
    }
    return {
        "model": model,
        "system": system,
        "sharding": s.sharding.kind.value,
        "assume_balanced": s.sharding.assume_balanced,
        "mode": s.mode.value,
        "overlap": s.overlap_policy.value,
    }


def serialize_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)


def with_mem_bw_override(scenario: Scenario, bandwidth: float) -> Scenario:
    """Pin the fast memory's effective random-access bandwidth (calibrated runs)."""
    chip = scenario.system.chip
    memory = tuple(
        replace(m, effective_bw_override=bandwidth) if m.role == MemoryRole.FAST else m
        for m in chip.memory
    )
    return replace(scenario, system=replace(scenario.system, chip=replace(chip, memory=memory)))
