"""Timeline figure for a simulator trace (optional; needs matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_MARKERS = {"decide": ("s", "tab:blue"), "certify": ("D", "tab:orange"), "compose": ("*", "tab:green")}


def timeline(trace, scenario, path: str) -> None:
    """One row per process; deliveries as dots, protocol milestones as markers."""
    names = list(scenario.processes)
    row = {n: k for k, n in enumerate(names)}
    fig, ax = plt.subplots(figsize=(9, 0.45 * len(names) + 1.5))
    xs = [e.step for e in trace.events if e.event == "deliver"]
    ys = [row[e.process] for e in trace.events if e.event == "deliver"]
    ax.scatter(xs, ys, s=6, c="0.7", label="deliver")
    for event, (marker, color) in _MARKERS.items():
        pts = [(e.step, row[e.process]) for e in trace.events if e.event == event]
        if pts:
            ax.scatter(*zip(*pts), marker=marker, s=50, c=color, label=event, zorder=3)
    for n in scenario.faulty:
        ax.axhspan(row[n] - 0.4, row[n] + 0.4, color="tab:red", alpha=0.12)
    ax.set_yticks(range(len(names)), names)
    ax.set_xlabel("step")
    ax.set_title(f"handshake timeline (seed {scenario.seed})")
    ax.legend(loc="upper left", fontsize="small", ncol=4)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
