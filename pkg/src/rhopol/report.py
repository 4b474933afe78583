"""Figures for exploration results (states per depth), written to image files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_levels(series: dict, path, title: str = "", frontier: dict = None):
    """Grouped bars of reachable states per depth, one group per series.

    ``series`` maps a label to its level sizes; ``frontier`` optionally maps a
    label to the number of states left unexpanded, shown in the legend.
    """
    frontier = frontier or {}
    depth = max((len(v) for v in series.values()), default=0)
    xs = np.arange(depth)
    width = 0.8 / max(len(series), 1)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for k, (label, sizes) in enumerate(series.items()):
        ys = np.zeros(depth)
        ys[:len(sizes)] = sizes
        tag = f"{label} ({sum(sizes)} states"
        tag += f", {frontier[label]} unexpanded)" if frontier.get(label) else ")"
        ax.bar(xs + (k - (len(series) - 1) / 2) * width, ys, width, label=tag)
    ax.set_xlabel("depth (reduction steps)")
    ax.set_ylabel("distinct states")
    ax.set_xticks(xs)
    ax.spines[["top", "right"]].set_visible(False)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
