"""Figure rendering for run artifacts.

Every report-producing command writes delimited data first; these helpers
render the matching matplotlib figure next to it.  The Agg backend is forced
so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_heatmap_figure(matrix, path, title: str = "Concept discrepancy heatmap") -> None:
    """Render a HeatmapMatrix: window end positions on x, preceding sub-window on y."""
    fig, ax = plt.subplots(figsize=(9, 3.2))
    n_rows = matrix.values.shape[0]
    mesh = ax.imshow(
        matrix.values,
        aspect="auto",
        origin="lower",
        interpolation="nearest",
        extent=(
            float(matrix.window_end_times[0]),
            float(matrix.window_end_times[-1]),
            0.5,
            n_rows + 0.5,
        ),
        cmap="viridis",
    )
    ax.set_xlabel("window end position")
    ax.set_ylabel("preceding sub-window")
    ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="MCD")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sigma_trace_figure(window_end_times, sigma_trace, statistics, path) -> None:
    """Threshold trajectory with the per-window detection statistic overlaid."""
    fig, ax = plt.subplots(figsize=(9, 3.2))
    ax.plot(window_end_times, statistics, lw=0.9, color="tab:gray", label="window MCD")
    ax.plot(window_end_times, sigma_trace, lw=1.6, color="tab:red", label="threshold sigma")
    ax.set_xlabel("window end position")
    ax.set_ylabel("MCD")
    ax.set_title("Drift threshold over time")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metrics_figure(summary: dict, path) -> None:
    """Per-seed metric values with their mean, one column per metric."""
    metrics = ("precision", "f1", "mcc")
    fig, ax = plt.subplots(figsize=(6, 3.2))
    for pos, name in enumerate(metrics):
        values = np.asarray(summary[name]["per_seed"], dtype=float)
        jitter = np.linspace(-0.15, 0.15, len(values))
        ax.plot(pos + jitter, values, "o", ms=4, alpha=0.6, color="tab:blue")
        ax.hlines(summary[name]["mean"], pos - 0.25, pos + 0.25, color="tab:red", lw=2)
    ax.set_xticks(range(len(metrics)))
    ax.set_xticklabels(metrics)
    ax.set_ylim(-1.05, 1.05)
    ax.set_ylabel("score")
    ax.set_title(f"{summary.get('method', '')} over {summary['runs']} runs".strip())
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
