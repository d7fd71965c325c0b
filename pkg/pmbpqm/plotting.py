"""SVG figures for sweeps and density-evolution curves."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# Fixed salt and no date keep the SVG output byte-stable
plt.rcParams["svg.hashsalt"] = "pmbpqm"
SVG_METADATA = {"Date": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def plot_thresholds(
    thresholds: Mapping[str, Sequence[tuple]],
    holevo: Mapping[str, Sequence[tuple]],
    path: str | Path,
) -> Path:
    """
    Threshold curves next to Holevo bounds, both against |pi/2 - theta|.

    thresholds maps an ensemble label to threshold_curve rows; holevo maps a rate
    label to holevo_curve rows. The y axis is p = q/2.
    """
    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5), sharey=True)
    for label, rows in thresholds.items():
        left.plot([abs(math.pi / 2 - r[0]) for r in rows], [r[2] for r in rows], marker="o", label=label)
    for label, rows in holevo.items():
        right.plot([abs(math.pi / 2 - r[0]) for r in rows], [r[1] / 2 for r in rows], label=label)

    left.set_title("PMBPQM density-evolution threshold")
    right.set_title("Holevo bound")
    for ax in (left, right):
        ax.set_xlabel("|pi/2 - theta|")
        ax.grid(True, alpha=0.3)
        ax.legend()
    left.set_ylabel("p = q/2")
    return _save(fig, path)


def plot_success(
    rows: Sequence[Sequence[float]],
    columns: Sequence[str],
    path: str | Path,
    title: str = "",
) -> Path:
    """
    Success probability against theta, one line per (p, method).

    rows carry theta and p in their first two columns; every remaining column
    whose name starts with 'P_' is drawn.
    """
    methods = [(i, c) for i, c in enumerate(columns) if c.startswith("P_")]
    fig, ax = plt.subplots(figsize=(8, 5))
    for p in sorted({r[1] for r in rows}):
        sub = [r for r in rows if r[1] == p]
        for i, name in methods:
            ax.plot([r[0] for r in sub], [r[i] for r in sub], label=f"{name[2:]} p={p:g}")
    ax.set_xlabel("theta")
    ax.set_ylabel("success probability")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    return _save(fig, path)
