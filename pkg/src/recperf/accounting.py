"""Static per-step quantities derived from a model configuration.

Everything here is pure arithmetic over the model shape: dense parameter
counts, forward FLOPs per sample, and the per-chip byte payloads / FLOP counts
for every communication and memory phase of a distributed step, under either
sharding mode. Intermediate tensors are represented only by their cost, never
materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

from recperf.config import ModelConfig, Scenario, ShardingKind


@dataclass(frozen=True)
class DenseParamCount:
    weights: int
    biases: int
    bytes_total: int


@dataclass(frozen=True)
class PlacementPlan:
    tables_per_chip: tuple[int, ...]
    imbalance_factor: float          # max chip load / mean chip load, >= 1
    has_empty_chips: bool            # flagged when n > number of tables


@dataclass(frozen=True)
class PhaseVolumes:
    """Per-chip payloads (bytes) and FLOP counts for one step."""

    idx_exchange_payload: float      # lookup indices, all-to-all input
    lookup_bytes: float              # embedding rows read from DRAM
    pool_flops: float                # pooling adds on the looking-up side
    embed_exchange_payload: float    # pooled (unsharded) or unpooled (sharded)
    fwd_dense_flops: float           # MLPs + feature interactions
    grad_exchange_payload: float     # embedding gradients back to owners
    expand_flops: float              # pooled-gradient expansion copies
    embed_write_bytes: float         # embedding update writes (write-only)
    dense_grad_payload: float        # dense-parameter all-reduce input
    bwd_dense_flops: float


def interaction_pairs(num_tables: int) -> int:
    """Unordered off-diagonal feature pairs over the s+1 concatenated vectors."""
    s = num_tables
    return (s * s + s) // 2


def interactions_output_size(m: ModelConfig) -> int:
    return interaction_pairs(m.num_tables)


def _mlp_macs(m: ModelConfig) -> tuple[int, int]:
    bottom = 0
    prev = m.num_dense_features
    for width in m.bottom_mlp_layers:
        bottom += prev * width
        prev = width
    top = 0
    prev = interactions_output_size(m) + m.embedding_dim  # interaction + bottom output concat
    for width in m.top_mlp_layers:
        top += prev * width
        prev = width
    return bottom, top


def dense_param_count(m: ModelConfig) -> DenseParamCount:
    bottom, top = _mlp_macs(m)
    weights = bottom + top
    biases = sum(m.bottom_mlp_layers) + sum(m.top_mlp_layers)
    return DenseParamCount(
        weights=weights, biases=biases,
        bytes_total=(weights + biases) * m.element_bytes,
    )


def dense_flops_per_sample(m: ModelConfig) -> float:
    """Forward MLP + feature-interaction FLOPs for one sample (no pooling)."""
    bottom, top = _mlp_macs(m)
    interaction = 2 * (m.num_tables + 1) ** 2 * m.embedding_dim
    return 2 * (bottom + top) + interaction


def pooling_flops_per_sample(m: ModelConfig) -> float:
    return m.num_tables * (m.lookups_per_table - 1) * m.embedding_dim


def flops_per_sample(m: ModelConfig) -> float:
    """Total forward FLOPs per sample: 2x MLP MACs + batched interaction matmul
    + sum-pooling adds."""
    return dense_flops_per_sample(m) + pooling_flops_per_sample(m)


def placement(m: ModelConfig, num_chips: int) -> PlacementPlan:
    """Greedy balanced table-to-chip assignment for the unsharded mode."""
    if num_chips < 1:
        raise ValueError("num_chips must be >= 1")
    s = m.num_tables
    base, extra = divmod(s, num_chips)
    counts = tuple(base + 1 if i < extra else base for i in range(num_chips))
    mean = s / num_chips
    return PlacementPlan(
        tables_per_chip=counts,
        imbalance_factor=max(counts) / mean,
        has_empty_chips=min(counts) == 0,
    )


def message_volumes(scenario: Scenario) -> PhaseVolumes:
    """Per-chip phase payloads for the scenario's sharding mode.

    The fully-sharded forward exchanges unpooled rows (a reduce-scatter shaped
    op), which is what makes sharding expensive; the unsharded forward
    exchanges only pooled vectors. Embedding updates are write-only: the rows
    read in the forward pass are buffered on chip, so update traffic equals
    lookup traffic.
    """
    m = scenario.model
    n = scenario.system.num_chips
    s = m.num_tables
    l = m.lookups_per_table
    e = m.embedding_row_bytes
    b = m.batch_size
    b_local = b / n  # fractional shares allowed; this is an analytical model

    idx_payload = b_local * s * l * m.index_bytes
    params = dense_param_count(m)

    if scenario.sharding.kind == ShardingKind.UNSHARDED:
        if scenario.sharding.assume_balanced:
            load_factor = s / n
        else:
            plan = placement(m, n)
            load_factor = (s / n) * plan.imbalance_factor  # max-loaded chip governs
        lookup_bytes = b * load_factor * l * e
        pool_flops = b * load_factor * (l - 1) * m.embedding_dim
        embed_exchange = b * load_factor * e           # pooled vectors for owned tables
        grad_exchange = embed_exchange                 # pooled gradients, all-to-all
    else:
        lookup_bytes = b * s * l * e / n
        pool_flops = b * s * (l - 1) * m.embedding_dim / n
        embed_exchange = lookup_bytes                  # unpooled rows, reduce-scatter
        grad_exchange = b_local * s * e                # pooled gradients, all-gather input

    fwd_dense = dense_flops_per_sample(m) * b_local
    return PhaseVolumes(
        idx_exchange_payload=idx_payload,
        lookup_bytes=lookup_bytes,
        pool_flops=pool_flops,
        embed_exchange_payload=embed_exchange,
        fwd_dense_flops=fwd_dense,
        grad_exchange_payload=grad_exchange,
        expand_flops=b * s * l * m.embedding_dim / n,
        embed_write_bytes=lookup_bytes,
        dense_grad_payload=params.bytes_total,
        # Weight-gradient plus input-gradient passes; the loss gradient itself
        # is a handful of FLOPs per sample and is absorbed here.
        bwd_dense_flops=2 * fwd_dense,
    )
