"""Figures written next to the CSV/Markdown reports."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
    "svg.hashsalt": "llmalign",
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamps so reruns produce identical files
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else {"Date": None})
    plt.close(fig)
    return path


def plot_strategy_summary(averages: Mapping[str, Optional[Sequence[float]]], path: Path) -> Path:
    """Grouped bars of averaged precision, recall and F1, one group per strategy.

    ``averages`` maps strategy id to ``(precision, recall, f1)``, or ``None``
    when no pair completed.
    """
    with plt.rc_context(STYLE):
        strategies = list(averages)
        x = np.arange(len(strategies))
        width = 0.26
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(strategies) + 1.5), 3.0))
        for i, label in enumerate(("Precision", "Recall", "F1")):
            vals = [averages[s][i] if averages[s] is not None else 0.0 for s in strategies]
            ax.bar(x + (i - 1) * width, vals, width, label=label)
        ax.set_xticks(x)
        ax.set_xticklabels(strategies)
        ax.set_ylim(0, 1)
        ax.set_ylabel("score")
        ax.set_title("Averaged scores per prompt strategy")
        ax.legend(ncol=3, loc="upper center", frameon=False)
        return _save(fig, path)


def plot_f1_grid(pairs: Sequence[str], strategies: Sequence[str],
                 f1: Mapping[tuple[str, str], Optional[float]], path: Path) -> Path:
    """Heatmap of per-pair F1; blank cells are runs that did not complete."""
    with plt.rc_context(STYLE):
        grid = np.full((len(pairs), len(strategies)), np.nan)
        for i, p in enumerate(pairs):
            for j, s in enumerate(strategies):
                v = f1.get((p, s))
                if v is not None and not math.isnan(v):
                    grid[i, j] = v
        fig, ax = plt.subplots(figsize=(1.0 + 0.7 * len(strategies), 0.8 + 0.28 * len(pairs)))
        im = ax.imshow(np.ma.masked_invalid(grid), vmin=0, vmax=1, cmap="viridis", aspect="auto")
        ax.set_xticks(range(len(strategies)))
        ax.set_xticklabels(strategies)
        ax.set_yticks(range(len(pairs)))
        ax.set_yticklabels(pairs)
        for i in range(len(pairs)):
            for j in range(len(strategies)):
                text = "-" if np.isnan(grid[i, j]) else f"{grid[i, j]:.2f}"
                ax.text(j, i, text, ha="center", va="center", fontsize=7,
                        color="black" if np.isnan(grid[i, j]) or grid[i, j] > 0.6 else "white")
        fig.colorbar(im, ax=ax, label="F1")
        ax.set_title("F1 per ontology pair")
        return _save(fig, path)
