"""Figure rendering for experiment output directories.

Renders two publication-style figures next to the delimited output: error
versus retraining window size across strategies, and per-step wall-clock
traces. Uses the Agg backend so it works headless.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _load_summaries(out_dir: Path) -> dict:
    """strategy -> list of summary dicts (one per seed)."""
    with open(out_dir / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    summaries = {}
    for strategy in manifest["strategies"]:
        rows = []
        for seed in manifest["seeds"]:
            path = out_dir / strategy / str(seed) / "summary.json"
            with open(path, encoding="utf-8") as fh:
                rows.append(json.load(fh))
        summaries[strategy] = rows
    return summaries


def _mean(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def render_error_vs_window(out_dir) -> Path:
    """Scatter of MSE/MAE against the mean retraining window size."""
    out_dir = Path(out_dir)
    summaries = _load_summaries(out_dir)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for strategy, rows in summaries.items():
        x = _mean([r.get("mean_window_size") for r in rows])
        mse = _mean([r.get("mse_avg") for r in rows])
        mae = _mean([r.get("mae_avg") for r in rows])
        for ax, y in zip(axes, (mse, mae)):
            if y is None:
                continue
            if x is None:
                ax.axhline(y, linestyle="--", linewidth=1, label=strategy)
            else:
                marker = "*" if strategy == "caliper" else "o"
                size = 140 if strategy == "caliper" else 40
                ax.scatter([x], [y], s=size, marker=marker, label=strategy)
    for ax, title in zip(axes, ("MSE", "MAE")):
        ax.set_xscale("log")
        ax.set_xlabel("mean retraining window size")
        ax.set_ylabel(title)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    path = fig_dir / "error_vs_window.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_step_times(out_dir) -> Path:
    """Per-step wall-clock traces (log seconds), one line per strategy."""
    out_dir = Path(out_dir)
    with open(out_dir / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    seed = manifest["seeds"][0]
    fig, ax = plt.subplots(figsize=(9, 3.2))
    for strategy in manifest["strategies"]:
        path = out_dir / strategy / str(seed) / "timing.csv"
        ts, times = [], []
        with open(path, encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                t, ns, _ = line.rstrip("\n").split(",")
                ts.append(int(t))
                times.append(max(int(ns), 1) / 1e9)
        ax.plot(ts, times, linewidth=0.6, alpha=0.8, label=strategy)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("wall-clock seconds")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    path = fig_dir / "step_times.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_all(out_dir) -> list[Path]:
    return [render_error_vs_window(out_dir), render_step_times(out_dir)]
