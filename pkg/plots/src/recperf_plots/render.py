"""Matplotlib renderers for the four figure styles.

heatmap: metric over the latency x bandwidth sweep grid (log-QPS color scale).
lines:   metric vs latency, one line per bandwidth.
bars:    per-config bar chart from a comparison table.
phase_bars: stacked per-row phase shares, each bar normalized to 100%.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from recperf_plots.io import RaggedGridError, column, load_rows, require_column

# Columns that are bookkeeping rather than phase times in estimate rows.
_NON_PHASE = {
    "latency_s", "bandwidth_Bps", "qps", "samples_per_sec", "step_time_s",
    "mem_util", "compute_util", "allreduce_fraction", "bottleneck", "mode",
    "overlap_policy",
}


class PlotKind(str, Enum):
    HEATMAP = "heatmap"
    LINES = "lines"
    BARS = "bars"
    PHASE_BARS = "phase_bars"


@dataclass(frozen=True)
class PlotRequest:
    input_path: str
    plot_kind: PlotKind
    metric: str
    output_path: str


def _grid(rows: list[dict], metric: str):
    latencies = sorted({row["latency_s"] for row in rows})
    bandwidths = sorted({row["bandwidth_Bps"] for row in rows})
    if len(rows) != len(latencies) * len(bandwidths):
        raise RaggedGridError(
            f"{len(rows)} rows do not fill a {len(latencies)}x{len(bandwidths)} grid")
    values = np.full((len(latencies), len(bandwidths)), np.nan)
    lat_index = {v: i for i, v in enumerate(latencies)}
    bw_index = {v: i for i, v in enumerate(bandwidths)}
    for row in rows:
        values[lat_index[row["latency_s"]], bw_index[row["bandwidth_Bps"]]] = row[metric]
    if np.isnan(values).any():
        raise RaggedGridError("duplicate or missing grid points")
    return np.array(latencies), np.array(bandwidths), values


def phase_names(rows: list[dict]) -> list[str]:
    return [key for key in rows[0] if key not in _NON_PHASE]


def phase_fractions(row: dict, names: list[str]) -> list[float]:
    """Per-phase shares of one estimate row, normalized to sum to 1."""
    times = [float(row[name]) for name in names]
    total = sum(times)
    if total <= 0:
        raise ValueError("row has no positive phase times")
    return [t / total for t in times]


def _render_heatmap(rows, metric, ax):
    require_column(rows, "latency_s")
    require_column(rows, "bandwidth_Bps")
    latencies, bandwidths, values = _grid(rows, metric)
    mesh = ax.pcolormesh(
        bandwidths / 1e9, latencies * 1e6, values,
        norm=LogNorm(vmin=values.min(), vmax=values.max()),
        cmap="viridis", shading="nearest",
    )
    ax.set_xlabel("bandwidth (GB/s)")
    ax.set_ylabel("latency (µs)")
    ax.figure.colorbar(mesh, ax=ax, label=metric)


def _render_lines(rows, metric, ax):
    require_column(rows, "latency_s")
    require_column(rows, "bandwidth_Bps")
    bandwidths = sorted({row["bandwidth_Bps"] for row in rows})
    for bw in bandwidths:
        series = sorted((r["latency_s"], r[metric]) for r in rows if r["bandwidth_Bps"] == bw)
        ax.plot([lat * 1e6 for lat, _ in series], [v for _, v in series],
                marker="o", label=f"{bw / 1e9:.0f} GB/s")
    ax.set_xscale("log")
    ax.set_xlabel("latency (µs)")
    ax.set_ylabel(metric)
    ax.legend(fontsize="small")


def _render_bars(rows, metric, ax):
    require_column(rows, "config_label")
    labels = column(rows, "config_label")
    values = column(rows, metric)
    ax.bar(range(len(labels)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize="small")
    ax.set_ylabel(metric)


def _render_phase_bars(rows, metric, ax):
    require_column(rows, "step_time_s")
    names = phase_names(rows)
    if not names:
        raise ValueError("input rows carry no phase columns")
    bottoms = np.zeros(len(rows))
    positions = np.arange(len(rows))
    for i, name in enumerate(names):
        shares = np.array([phase_fractions(row, names)[i] for row in rows])
        ax.bar(positions, shares, bottom=bottoms, label=name)
        bottoms += shares
    ax.set_ylim(0, 1)
    ax.set_ylabel("share of step time")
    ax.set_xlabel("row")
    ax.legend(fontsize="x-small")


_RENDERERS = {
    PlotKind.HEATMAP: _render_heatmap,
    PlotKind.LINES: _render_lines,
    PlotKind.BARS: _render_bars,
    PlotKind.PHASE_BARS: _render_phase_bars,
}


def render(req: PlotRequest) -> Path:
    rows = load_rows(req.input_path)
    if req.plot_kind != PlotKind.PHASE_BARS:
        require_column(rows, req.metric)
    fig, ax = plt.subplots(figsize=(7, 5), constrained_layout=True)
    try:
        _RENDERERS[PlotKind(req.plot_kind)](rows, req.metric, ax)
        out = Path(req.output_path)
        fig.savefig(out, dpi=120)
    finally:
        plt.close(fig)
    return out
