"""Top-level acceptance suite.

One test per headline requirement; each prints a single PASS line when its
assertions hold (failures surface through pytest as usual). Banded tolerances
are used where the published comparison points do not pin the internal model
exactly.
"""

import dataclasses
import random
import time

import pytest

from recperf.accounting import dense_param_count, flops_per_sample, message_volumes
from recperf.collectives import CalibrationSample, cc_time, fit_latency_bandwidth
from recperf.config import (
    CcOp,
    MODEL_PRESETS,
    OverlapPolicy,
    RunMode,
    SYSTEM_PRESETS,
    Scenario,
    ShardingKind,
    ShardingMode,
    with_mem_bw_override,
)
from recperf.engine import estimate_step, recompose
from recperf.memmodel import (
    TIMING_PRESETS,
    capacity_summary,
    effective_random_access_bandwidth,
    pin_bandwidth,
)
from recperf.sweep import SweepGrid, bandwidth_axis, compare, latency_axis, run_sweep

from .oracles import dram_schedule_bandwidth, mlp_weight_sum
from .test_engine import random_scenario, scale_cc

SMALL = MODEL_PRESETS["dlrm-rm2-small"]
LARGE = MODEL_PRESETS["dlrm-rm2-large"]

CALIBRATED_MEM_BW = 1.17e12  # documented effective-bandwidth override, B/s


def scenario(model=SMALL, system="recspeed16", sharding=ShardingKind.UNSHARDED,
             mode=RunMode.INFERENCE, n_chips=None) -> Scenario:
    spec = SYSTEM_PRESETS[system]
    if n_chips is not None:
        spec = dataclasses.replace(spec, num_chips=n_chips)
    return Scenario(model=model, system=spec,
                    sharding=ShardingMode(kind=sharding), mode=mode)


def ok(label: str) -> None:
    print(f"PASS: {label}")


def test_message_volume_oracle_suite():
    small_un = message_volumes(scenario(n_chips=8))
    assert small_un.idx_exchange_payload == 320_000
    assert small_un.embed_exchange_payload == 64_000
    small_fs = message_volumes(scenario(sharding=ShardingKind.FULLY_SHARDED, n_chips=8))
    assert small_fs.embed_exchange_payload == 5_120_000
    large_fs = message_volumes(scenario(model=LARGE, sharding=ShardingKind.FULLY_SHARDED, n_chips=8))
    assert large_fs.embed_exchange_payload == 61_440_000
    large_un = message_volumes(scenario(model=LARGE, n_chips=8))
    assert large_un.idx_exchange_payload / small_un.idx_exchange_payload == 3
    assert large_un.embed_exchange_payload / small_un.embed_exchange_payload == 12
    ok("message volumes: 320K/64K/5.12M/61.44M bytes exact, 3x and 12x ratios exact")


def test_flops_and_params():
    assert flops_per_sample(SMALL) == pytest.approx(1.40e6, rel=0.05)
    assert flops_per_sample(LARGE) == pytest.approx(2.0e6, rel=0.10)
    for model in (SMALL, LARGE):
        pairs = (model.num_tables ** 2 + model.num_tables) // 2
        expected = (mlp_weight_sum(model.num_dense_features, list(model.bottom_mlp_layers))
                    + mlp_weight_sum(pairs + model.embedding_dim, list(model.top_mlp_layers)))
        assert dense_param_count(model).weights == expected
    ok("FLOPs within published bands; dense params match the per-layer oracle exactly")


def test_cc_bounds_and_asymptotics():
    from recperf.collectives import wire_bytes_per_proc
    v = 1e6
    for n in range(1, 65):
        lower = 0.0 if n == 1 else v * (n - 1) / n
        assert wire_bytes_per_proc(CcOp.ALL_TO_ALL, v, n) == pytest.approx(lower)
        assert wire_bytes_per_proc(CcOp.REDUCE_SCATTER, v, n) == pytest.approx(lower)
        assert wire_bytes_per_proc(CcOp.ALL_REDUCE, v, n) == pytest.approx(2 * lower)
        assert wire_bytes_per_proc(CcOp.ALL_GATHER, v, n) == pytest.approx(0.0 if n == 1 else v * (n - 1))
    spec = SYSTEM_PRESETS["ref8-homogeneous"].chip.cc
    eff_bw = spec.per_chip_bandwidth * spec.link_efficiency
    payload = 1e9
    n = 16
    # each processor moves its (n-1)/n wire share at the link rate; the
    # all-reduce doubles the wire volume, halving delivered throughput
    wire = wire_bytes_per_proc(CcOp.ALL_TO_ALL, payload, n)
    assert wire / cc_time(CcOp.ALL_TO_ALL, payload, n, spec) == pytest.approx(eff_bw, rel=0.01)
    assert wire / cc_time(CcOp.ALL_REDUCE, payload, n, spec) == pytest.approx(eff_bw / 2, rel=0.01)
    dgx2 = SYSTEM_PRESETS["dgx2"].chip.cc
    assert dgx2.per_chip_bandwidth * dgx2.link_efficiency == pytest.approx(118.5e9, rel=0.01)
    ok("wire-bytes formulas exact for n in [1,64]; BW and BW/2 asymptotics; "
       "DGX-2 effective link rate 118.5 GB/s")


def test_calibration_recovery():
    latency, bandwidth = 5e-6, 200e9
    clean = [CalibrationSample(p, latency + p / bandwidth)
             for p in (1e3, 1e4, 1e5, 1e6, 1e7, 1e8)]
    fit = fit_latency_bandwidth(clean)
    assert fit.latency == pytest.approx(latency, rel=1e-9)
    assert fit.bandwidth == pytest.approx(bandwidth, rel=1e-9)

    rng = random.Random(1234)
    noisy = []
    for i in range(60):
        payload = 1e5 + (2e6 - 1e5) * i / 59
        truth = latency + payload / bandwidth
        noisy.append(CalibrationSample(payload, truth * rng.uniform(0.95, 1.05)))
    noisy_fit = fit_latency_bandwidth(noisy)
    assert noisy_fit.latency == pytest.approx(latency, rel=0.10)
    assert noisy_fit.bandwidth == pytest.approx(bandwidth, rel=0.10)
    ok("calibration: exact recovery to 1e-9; noisy (+/-5%) recovery within 10%")


def test_capacity_summary():
    summary = capacity_summary(SYSTEM_PRESETS["recspeed16"])
    assert summary.total_bytes == pytest.approx(5.632e12)
    assert summary.fast_fraction == pytest.approx(0.273, abs=0.005)
    ok("recspeed16 capacity 5.632 TB total, fast fraction 0.273 +/- 0.005")


def test_calibrated_table_reproduction():
    inf = estimate_step(with_mem_bw_override(scenario(), CALIBRATED_MEM_BW))
    assert inf.qps == pytest.approx(300e3, rel=0.10)
    assert inf.mem_util == pytest.approx(0.67, abs=0.05)
    tr = estimate_step(with_mem_bw_override(scenario(mode=RunMode.TRAINING), CALIBRATED_MEM_BW))
    assert tr.qps == pytest.approx(99e3, rel=0.15)
    assert tr.allreduce_fraction == pytest.approx(0.33, abs=0.07)
    ok("calibrated: inference 300K QPS +/-10% with mem_util 0.67 +/-0.05; "
       "training 99K +/-15% with all-reduce share 0.33 +/-0.07")


def test_raw_table_reproduction():
    started = time.perf_counter()
    baseline = Scenario(model=SMALL, system=SYSTEM_PRESETS["dgx2"],
                        sharding=ShardingMode(kind=ShardingKind.UNSHARDED))
    candidate = Scenario(model=SMALL, system=SYSTEM_PRESETS["recspeed16"],
                         sharding=ShardingMode(kind=ShardingKind.UNSHARDED))
    rows = compare(baseline, candidate)
    expected = [
        # (candidate qps, baseline qps, speedup), row order:
        # inference small un/sh, large un/sh; training small un/sh, large un/sh
        (300e3, 4.9e3, 62), (207e3, 4.5e3, 46), (56e3, 4.7e3, 12), (30e3, 2.1e3, 14),
        (99e3, 2.2e3, 45), (83e3, 2.1e3, 39), (25e3, 2.0e3, 12), (16e3, 1.2e3, 13),
    ]
    for row, (cand_qps, base_qps, speedup) in zip(rows, expected):
        assert row.candidate_qps == pytest.approx(cand_qps, rel=0.35), row.config_label
        assert row.baseline_qps == pytest.approx(base_qps, rel=0.35), row.config_label
        assert row.speedup == pytest.approx(speedup, rel=0.35), row.config_label
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    ok("raw presets: all 8 QPS cells and all 8 speedups within +/-35% "
       f"({elapsed * 1e3:.0f} ms)")


def _qps_at(base: Scenario, latency: float, bandwidth: float) -> float:
    return estimate_step(
        run_point_scenario(base, latency, bandwidth)).qps


def run_point_scenario(base: Scenario, latency: float, bandwidth: float) -> Scenario:
    from recperf.sweep import with_cc_point
    return with_cc_point(base, latency, bandwidth)


def test_qualitative_sweep_properties():
    ref8 = scenario(system="ref8-homogeneous")

    for bw in (100e9, 1000e9):
        ratio = _qps_at(ref8, 0.5e-6, bw) / _qps_at(ref8, 10e-6, bw)
        assert 3 <= ratio <= 6, (bw, ratio)

    sharded = dataclasses.replace(ref8, sharding=ShardingMode(kind=ShardingKind.FULLY_SHARDED))
    penalty_low = _qps_at(ref8, 10e-6, 100e9) / _qps_at(sharded, 10e-6, 100e9)
    penalty_high = _qps_at(ref8, 10e-6, 1000e9) / _qps_at(sharded, 10e-6, 1000e9)
    assert penalty_low == pytest.approx(3.1, rel=0.30)
    assert penalty_high == pytest.approx(1.2, rel=0.30)

    large = scenario(model=LARGE, system="ref8-homogeneous")
    qps = [_qps_at(large, 10e-6, bw) for bw in bandwidth_axis()]
    spread = (max(qps) - min(qps)) / max(qps)
    assert spread < 0.15

    started = time.perf_counter()
    for mode in RunMode:
        for model in (SMALL, LARGE):
            for kind in ShardingKind:
                base = scenario(model=model, system="ref8-homogeneous", sharding=kind, mode=mode)
                grid = SweepGrid(latency_axis=latency_axis(), bandwidth_axis=bandwidth_axis(),
                                 base=base)
                assert len(run_sweep(grid)) == 380
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    ok("latency ratio in [3,6] at both bandwidth extremes; sharding penalty "
       f"{penalty_low:.2f}->{penalty_high:.2f}; large-model bandwidth spread "
       f"{spread:.3f} < 0.15; full 380x8 sweep in {elapsed:.2f} s")


def test_property_suites():
    for name, t in TIMING_PRESETS.items():
        for size in (64, 128, 256):
            model_bw = effective_random_access_bandwidth(t, 1, size)
            oracle_bw = dram_schedule_bandwidth(
                t.data_rate, t.channel_width_bits, t.burst_length, t.banks_per_channel,
                t.tRC, t.tRRD, t.tFAW, t.channels_per_unit, size)
            assert model_bw == pytest.approx(oracle_bw, rel=0.02), (name, size)
            assert model_bw <= pin_bandwidth(t, 1) * (1 + 1e-12)
        sizes = [s for s in (32, 64, 128, 256, 512) if s <= t.row_bytes]
        curve = [effective_random_access_bandwidth(t, 1, s) for s in sizes]
        assert all(b >= a for a, b in zip(curve, curve[1:]))

    rng = random.Random(4242)
    for _ in range(1000):
        s = random_scenario(rng)
        base = estimate_step(s)
        assert estimate_step(scale_cc(s, latency_factor=2.0)).step_time >= base.step_time * (1 - 1e-12)
        assert estimate_step(scale_cc(s, bandwidth_factor=2.0)).step_time <= base.step_time * (1 + 1e-12)
        sequential = estimate_step(dataclasses.replace(s, overlap_policy=OverlapPolicy.SEQUENTIAL))
        assert sequential.step_time >= base.step_time * (1 - 1e-12)
        assert recompose(base, s) == pytest.approx(base.step_time, rel=1e-12)
    ok("DRAM model within 2% of the command-schedule oracle; bandwidth curves "
       "capped and nondecreasing; step-time monotonicity, sequential >= "
       "pipelined, and exact recomposition over 1000 randomized scenarios")
