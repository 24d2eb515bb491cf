"""Command-line interface.

Exit codes: 0 success, 1 validation/configuration error, 2 usage error.
Data goes to stdout (or --output); diagnostics go to stderr with the
machine-readable code of the first violated invariant.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from recperf import __version__
from recperf.accounting import message_volumes
from recperf.collectives import CalibrationError, fit_latency_bandwidth, read_samples_csv
from recperf.config import (
    ConfigError,
    MODEL_PRESETS,
    ModelConfig,
    OverlapPolicy,
    RunMode,
    SYSTEM_PRESETS,
    Scenario,
    ShardingKind,
    ShardingMode,
    SystemSpec,
    load_scenario,
    preset,
    require_valid,
    with_mem_bw_override,
)
from recperf.engine import estimate_step
from recperf.memmodel import TIMING_PRESETS, bandwidth_curve_rows
from recperf.sweep import (
    SweepGrid,
    bandwidth_axis,
    compare,
    comparison_csv,
    comparison_json,
    latency_axis,
    run_sweep,
    sweep_csv,
    sweep_json,
)


def _fail(exc: Exception) -> None:
    code = getattr(exc, "code", "ERROR")
    click.echo(f"error[{code}]: {exc}", err=True)
    sys.exit(1)


def _write_output(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


def _build_scenario(scenario_path: str | None, system: str | None, model: str | None,
                    mode: str, sharding: str, overlap: str,
                    mem_bw_override: float | None) -> Scenario:
    if scenario_path:
        s = load_scenario(Path(scenario_path).read_text())
        # Flags take precedence over file values.
        from dataclasses import replace
        if model:
            entry = preset(model)
            if not isinstance(entry, ModelConfig):
                raise ConfigError(f"{model!r} is not a model preset", code="INVALID_FIELD")
            s = replace(s, model=entry)
        if system:
            entry = preset(system)
            if not isinstance(entry, SystemSpec):
                raise ConfigError(f"{system!r} is not a system preset", code="INVALID_FIELD")
            s = replace(s, system=entry)
        s = replace(
            s,
            sharding=ShardingMode(kind=ShardingKind(sharding)) if sharding else s.sharding,
            mode=RunMode(mode) if mode else s.mode,
            overlap_policy=OverlapPolicy(overlap) if overlap else s.overlap_policy,
        )
    else:
        if not system or not model:
            raise click.UsageError("provide --scenario or both --system and --model")
        model_entry = preset(model)
        system_entry = preset(system)
        if not isinstance(model_entry, ModelConfig):
            raise ConfigError(f"{model!r} is not a model preset", code="INVALID_FIELD")
        if not isinstance(system_entry, SystemSpec):
            raise ConfigError(f"{system!r} is not a system preset", code="INVALID_FIELD")
        s = Scenario(
            model=model_entry,
            system=system_entry,
            sharding=ShardingMode(kind=ShardingKind(sharding or "unsharded")),
            mode=RunMode(mode or "inference"),
            overlap_policy=OverlapPolicy(overlap or "pipelined"),
        )
    if mem_bw_override is not None:
        s = with_mem_bw_override(s, mem_bw_override)
    return require_valid(s)


_scenario_options = [
    click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False),
                 help="YAML scenario document."),
    click.option("--system", help="System preset name (overrides the file)."),
    click.option("--model", help="Model preset name (overrides the file)."),
    click.option("--mode", type=click.Choice([m.value for m in RunMode]), default=None),
    click.option("--sharding", type=click.Choice([k.value for k in ShardingKind]), default=None),
    click.option("--overlap", type=click.Choice([p.value for p in OverlapPolicy]), default=None),
    click.option("--mem-bw-override", type=float, default=None,
                 help="Pin the fast memory's effective random-access bandwidth (B/s)."),
]


def scenario_options(fn):
    for option in reversed(_scenario_options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Analytical throughput upper-bound model for distributed DLRM-style
    recommender inference and training."""
    click.echo(f"recperf {__version__}", err=True)


@main.command("run")
@scenario_options
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")
@click.option("--explain", is_flag=True, help="Print the per-phase payload table to stderr.")
def run_cmd(scenario_path, system, model, mode, sharding, overlap, mem_bw_override, output, explain):
    """Estimate a single step and emit the result as JSON."""
    try:
        scenario = _build_scenario(scenario_path, system, model, mode, sharding, overlap, mem_bw_override)
        if explain:
            volumes = message_volumes(scenario)
            click.echo("phase volumes (per chip):", err=True)
            for name, value in vars(volumes).items():
                click.echo(f"  {name:>24}: {value:,.1f}", err=True)
        estimate = estimate_step(scenario)
    except (ConfigError, ValueError) as exc:
        _fail(exc)
    _write_output(json.dumps(estimate.to_dict(), indent=2) + "\n", output)


@main.command("sweep")
@scenario_options
@click.option("--lat-min", type=float, default=0.5e-6, show_default=True, help="Sweep latency start (s).")
@click.option("--lat-max", type=float, default=10e-6, show_default=True, help="Sweep latency end (s).")
@click.option("--lat-steps", type=int, default=20, show_default=True)
@click.option("--bw-min", type=float, default=100e9, show_default=True, help="Sweep bandwidth start (B/s).")
@click.option("--bw-max", type=float, default=1000e9, show_default=True, help="Sweep bandwidth end (B/s).")
@click.option("--bw-steps", type=int, default=19, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False))
def sweep_cmd(scenario_path, system, model, mode, sharding, overlap, mem_bw_override,
              lat_min, lat_max, lat_steps, bw_min, bw_max, bw_steps, fmt, output):
    """Sweep collective latency x bandwidth over a scenario."""
    if lat_min >= lat_max or lat_steps < 2:
        raise click.UsageError("latency axis must be increasing with at least 2 steps")
    if bw_min >= bw_max or bw_steps < 2:
        raise click.UsageError("bandwidth axis must be increasing with at least 2 steps")
    try:
        base = _build_scenario(scenario_path, system, model, mode, sharding, overlap, mem_bw_override)
        grid = SweepGrid(
            latency_axis=latency_axis(lat_min, lat_max, lat_steps),
            bandwidth_axis=bandwidth_axis(bw_min, bw_max, bw_steps),
            base=base,
        )
        points = run_sweep(grid)
    except (ConfigError, ValueError) as exc:
        _fail(exc)
    text = sweep_csv(points) if fmt == "csv" else sweep_json(points)
    _write_output(text, output)


@main.command("compare")
@click.option("--baseline", required=True, help="Baseline system preset or scenario file.")
@click.option("--candidate", required=True, help="Candidate system preset or scenario file.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False))
def compare_cmd(baseline, candidate, fmt, output):
    """Compare two systems over the standard model/sharding/mode grid."""

    def to_scenario(ref: str) -> Scenario:
        if Path(ref).is_file():
            return load_scenario(Path(ref).read_text())
        entry = preset(ref)
        if not isinstance(entry, SystemSpec):
            raise ConfigError(f"{ref!r} is not a system preset", code="INVALID_FIELD")
        return Scenario(
            model=MODEL_PRESETS["dlrm-rm2-small"], system=entry,
            sharding=ShardingMode(kind=ShardingKind.UNSHARDED),
        )

    try:
        rows = compare(to_scenario(baseline), to_scenario(candidate))
    except (ConfigError, ValueError) as exc:
        _fail(exc)
    text = comparison_csv(rows) if fmt == "csv" else comparison_json(rows)
    _write_output(text, output)


@main.command("calibrate")
@click.option("--samples", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Two-column CSV: payload_bytes, seconds.")
@click.option("--output", "-o", type=click.Path(dir_okay=False))
def calibrate_cmd(samples, output):
    """Fit the latency/bandwidth model to measured collective samples."""
    try:
        fit = fit_latency_bandwidth(read_samples_csv(Path(samples).read_text()))
    except CalibrationError as exc:
        _fail(exc)
    payload = {
        "latency_s": fit.latency,
        "bandwidth_Bps": fit.bandwidth,
        "residual_rms_s": fit.residual,
        "intercept_clamped": fit.clamped,
    }
    _write_output(json.dumps(payload, indent=2) + "\n", output)


@main.command("presets")
@click.option("--timings", is_flag=True, help="Also list the DRAM timing presets.")
@click.option("--curve-out", type=click.Path(dir_okay=False),
              help="Write bandwidth-vs-access-size CSV for the timing presets.")
def presets_cmd(timings, curve_out):
    """List the model and system preset catalog."""
    click.echo("model presets:")
    for name, model in sorted(MODEL_PRESETS.items()):
        click.echo(f"  {name}: tables={model.num_tables} lookups={model.lookups_per_table} "
                   f"d={model.embedding_dim} batch={model.batch_size}")
    click.echo("system presets:")
    for name, system in sorted(SYSTEM_PRESETS.items()):
        cc = system.chip.cc
        click.echo(f"  {name}: chips={system.num_chips} compute={system.chip.compute_rate:.0f} "
                   f"bw={cc.per_chip_bandwidth:.0f} eff={cc.link_efficiency}")
    if timings:
        click.echo("dram timing presets:")
        for name, t in sorted(TIMING_PRESETS.items()):
            click.echo(f"  {name}: rate={t.data_rate:.2e} width={t.channel_width_bits}b "
                       f"BL={t.burst_length} banks={t.banks_per_channel} "
                       f"tRC={t.tRC*1e9:.2f}ns tRRD={t.tRRD*1e9:.2f}ns tFAW={t.tFAW*1e9:.2f}ns")
    if curve_out:
        rows = bandwidth_curve_rows()
        lines = ["preset,access_bytes,effective_Bps,pin_Bps"]
        lines += [f"{r['preset']},{r['access_bytes']},{r['effective_Bps']!r},{r['pin_Bps']!r}" for r in rows]
        Path(curve_out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
