"""Matplotlib renderings of walk telemetry."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .search import WalkTrace


def render_telemetry(traces: Iterable[WalkTrace], path: str | Path) -> None:
    """Plot rank against flips taken, one stepped line per walk.

    The horizontal axis is the cumulative number of flips, the vertical axis
    the scheme rank; each trace extends flat to its last recorded step.
    """
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    drawn = 0
    for trace in traces:
        if not trace.events:
            continue
        steps = [s for s, _ in trace.events]
        ranks = [r for _, r in trace.events]
        ax.step(steps, ranks, where="post", label=f"walk {trace.walk_id}")
        drawn += 1
    ax.set_xlabel("flips")
    ax.set_ylabel("rank")
    ax.set_title("rank along seeded walks")
    if 0 < drawn <= 12:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
