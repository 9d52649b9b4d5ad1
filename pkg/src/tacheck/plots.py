"""Figures for the timing report."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bufferlab import ArrivalPoint, TimingRow  # noqa: E402


def plot_timing(rows: Sequence[TimingRow], path: str | Path, title: str = "") -> None:
    """Arrival time per iteration: simulated markers over closed-form lines."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for point in ArrivalPoint:
        mine = [r for r in rows if r.point is point]
        if not mine:
            continue
        xs = [r.alpha for r in mine]
        (line,) = ax.plot(xs, [r.closed_form for r in mine], linewidth=1, label=point.value)
        ax.plot(xs, [r.measured for r in mine], "o", markersize=3, color=line.get_color())
    ax.set_xlabel("iteration α")
    ax.set_ylabel("time units")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if rows:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
