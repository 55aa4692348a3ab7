"""Static comparison figures rendered with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import RunMetrics  # noqa: E402


def plot_comparison(runs: dict[str, RunMetrics], path: Path, title: str = "") -> Path:
    """Per-message send-buffer residency and delivery latency, one series per engine."""
    fig, (ax_res, ax_lat) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for engine, rm in runs.items():
        ms = sorted(rm.messages.values(), key=lambda m: (m.c_tick, m.src, m.mid, m.dst))
        xs = range(len(ms))
        ax_res.plot(xs, [m.residency if m.residency is not None else float("nan") for m in ms],
                    label=engine, drawstyle="steps-mid")
        ax_lat.plot(xs, [m.latency if m.latency is not None else float("nan") for m in ms],
                    label=engine, drawstyle="steps-mid")
    ax_res.set_ylabel("residency (ticks)")
    ax_lat.set_ylabel("delivery latency (ticks)")
    ax_lat.set_xlabel("message (causal-send order)")
    ax_res.legend(loc="upper left")
    if title:
        ax_res.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
