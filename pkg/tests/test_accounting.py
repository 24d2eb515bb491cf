import dataclasses
import random

import pytest

from recperf.accounting import (
    dense_param_count,
    flops_per_sample,
    interaction_pairs,
    interactions_output_size,
    message_volumes,
    placement,
)
from recperf.config import (
    MODEL_PRESETS,
    ModelConfig,
    SYSTEM_PRESETS,
    Scenario,
    ShardingKind,
    ShardingMode,
)

from .oracles import best_balance_counts, brute_force_pairs, mlp_weight_sum

SMALL = MODEL_PRESETS["dlrm-rm2-small"]
LARGE = MODEL_PRESETS["dlrm-rm2-large"]


def scenario(model: ModelConfig, sharding: ShardingKind, n: int = 8) -> Scenario:
    system = dataclasses.replace(SYSTEM_PRESETS["ref8-homogeneous"], num_chips=n)
    return Scenario(model=model, system=system, sharding=ShardingMode(kind=sharding))


class TestDenseParams:
    def test_small_weights(self):
        count = dense_param_count(SMALL)
        assert count.weights == 605_312
        bottom = mlp_weight_sum(256, list(SMALL.bottom_mlp_layers))
        top = mlp_weight_sum(820 + 32, list(SMALL.top_mlp_layers))
        assert bottom == 103_424
        assert top == 501_888
        assert count.weights == bottom + top

    def test_large_weights(self):
        count = dense_param_count(LARGE)
        assert count.weights == 657_536
        bottom = mlp_weight_sum(256, list(LARGE.bottom_mlp_layers))
        top = mlp_weight_sum(820 + 128, list(LARGE.top_mlp_layers))
        assert count.weights == bottom + top

    def test_oracle_on_presets(self):
        for model in MODEL_PRESETS.values():
            count = dense_param_count(model)
            pairs = brute_force_pairs(model.num_tables + 1)
            top_in = pairs + model.embedding_dim
            expected = (mlp_weight_sum(model.num_dense_features, list(model.bottom_mlp_layers))
                        + mlp_weight_sum(top_in, list(model.top_mlp_layers)))
            assert count.weights == expected
            assert count.bytes_total == (count.weights + count.biases) * model.element_bytes

    def test_minimal_model(self):
        tiny = dataclasses.replace(
            SMALL, num_dense_features=1, bottom_mlp_layers=(1,), top_mlp_layers=(1,),
            num_tables=0, embedding_dim=1,
        )
        count = dense_param_count(tiny)
        # bottom 1x1 plus top (pairs 0 + d 1 = 1)x1
        assert count.weights == 2
        assert count.biases == 2


class TestInteractions:
    def test_small(self):
        assert interactions_output_size(SMALL) == 820

    def test_degenerate(self):
        assert interaction_pairs(1) == 1
        assert interaction_pairs(0) == 0

    def test_matches_enumeration_up_to_64(self):
        for s in range(65):
            # unordered pairs over the s+1 concatenated vectors: (s^2+s)/2
            assert interaction_pairs(s) == brute_force_pairs(s + 1)


class TestFlops:
    def test_small_near_published(self):
        value = flops_per_sample(SMALL)
        assert value == pytest.approx(1.40e6, rel=0.05)

    def test_large_near_published(self):
        value = flops_per_sample(LARGE)
        assert value == pytest.approx(2.0e6, rel=0.10)

    def test_degenerate_hand_count(self):
        tiny = dataclasses.replace(
            SMALL, num_dense_features=1, bottom_mlp_layers=(1,), top_mlp_layers=(1,),
            num_tables=0, embedding_dim=1, lookups_per_table=1,
        )
        # hand count: 2 MACs/layer x (1 bottom + 1 top) + interaction 2*(0+1)^2*1
        assert flops_per_sample(tiny) == 4 + 2


class TestMessageVolumes:
    def test_small_unsharded_n8(self):
        v = message_volumes(scenario(SMALL, ShardingKind.UNSHARDED))
        assert v.idx_exchange_payload == 320_000
        assert v.embed_exchange_payload == 64_000

    def test_small_fully_sharded_n8(self):
        v = message_volumes(scenario(SMALL, ShardingKind.FULLY_SHARDED))
        assert v.embed_exchange_payload == 5_120_000

    def test_large_fully_sharded_n8(self):
        v = message_volumes(scenario(LARGE, ShardingKind.FULLY_SHARDED))
        assert v.embed_exchange_payload == 61_440_000

    def test_large_vs_small_ratios(self):
        small = message_volumes(scenario(SMALL, ShardingKind.UNSHARDED))
        large = message_volumes(scenario(LARGE, ShardingKind.UNSHARDED))
        assert large.idx_exchange_payload / small.idx_exchange_payload == 3
        assert large.embed_exchange_payload / small.embed_exchange_payload == 12

    def test_write_equals_lookup(self):
        for kind in ShardingKind:
            v = message_volumes(scenario(SMALL, kind))
            assert v.embed_write_bytes == v.lookup_bytes

    def test_total_lookup_bytes_sharding_invariant(self):
        un = message_volumes(scenario(SMALL, ShardingKind.UNSHARDED))
        fs = message_volumes(scenario(SMALL, ShardingKind.FULLY_SHARDED))
        assert un.lookup_bytes == fs.lookup_bytes

    def test_linear_scaling(self):
        rng = random.Random(7)
        for _ in range(25):
            k = rng.randint(2, 9)
            base = scenario(SMALL, ShardingKind.UNSHARDED)
            scaled = scenario(
                dataclasses.replace(SMALL, batch_size=SMALL.batch_size * k),
                ShardingKind.UNSHARDED,
            )
            v0, v1 = message_volumes(base), message_volumes(scaled)
            assert v1.idx_exchange_payload == k * v0.idx_exchange_payload
            assert v1.lookup_bytes == k * v0.lookup_bytes
            assert v1.embed_exchange_payload == k * v0.embed_exchange_payload

    def test_dense_grad_payload(self):
        v = message_volumes(scenario(SMALL, ShardingKind.UNSHARDED))
        assert v.dense_grad_payload == dense_param_count(SMALL).bytes_total
        assert v.bwd_dense_flops == 2 * v.fwd_dense_flops


class TestPlacement:
    def test_exact_division(self):
        plan = placement(SMALL, 8)
        assert plan.tables_per_chip == (5,) * 8
        assert plan.imbalance_factor == 1.0
        assert not plan.has_empty_chips

    def test_uneven_division(self):
        plan = placement(SMALL, 16)
        assert sorted(plan.tables_per_chip, reverse=True) == best_balance_counts(40, 16)
        assert plan.imbalance_factor == pytest.approx(1.2)

    def test_more_chips_than_tables(self):
        tiny = dataclasses.replace(SMALL, num_tables=2)
        plan = placement(tiny, 4)
        assert sorted(plan.tables_per_chip, reverse=True) == [1, 1, 0, 0]
        assert plan.has_empty_chips
