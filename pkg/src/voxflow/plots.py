"""Figure rendering for the report-producing CLI commands.

Each function renders one PNG next to the delimited output it
illustrates. All figures use the Agg backend so rendering works headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .reliability import ReliabilityBin, UncertaintyStats
from .roi import AxisStats


def reliability_figure(bins: list[ReliabilityBin], path, title: str = "Reliability") -> None:
    """Reliability diagram plus a mean-prediction histogram."""
    fig, (ax1, ax2) = plt.subplots(
        2, 1, figsize=(5, 7), sharex=True,
        gridspec_kw={"height_ratios": [3, 1]})
    ax1.plot([0, 1], [0, 1], "k--", lw=1, label="perfectly calibrated")
    xs = [b.mean_pred for b in bins if b.count]
    ys = [b.pos_rate for b in bins if b.count]
    ax1.plot(xs, ys, "o-", color="tab:blue", label="model")
    ax1.set_ylabel("empirical positive rate")
    ax1.set_title(title)
    ax1.legend(loc="upper left")
    ax1.set_xlim(0, 1)
    ax1.set_ylim(0, 1)

    centers = [(b.lo + b.hi) / 2 for b in bins]
    counts = [b.count for b in bins]
    width = bins[0].hi - bins[0].lo
    ax2.bar(centers, counts, width=width * 0.9, color="tab:blue")
    ax2.set_xlabel("mean predicted probability")
    ax2.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def roi_figure(stats: dict[str, AxisStats], path) -> None:
    """Per-axis histograms of ROI sizes."""
    fig, axes = plt.subplots(1, len(stats), figsize=(4 * len(stats), 3.5))
    if len(stats) == 1:
        axes = [axes]
    for ax, (name, st) in zip(axes, stats.items()):
        centers = (st.hist_edges[:-1] + st.hist_edges[1:]) / 2
        width = st.hist_edges[1] - st.hist_edges[0]
        ax.bar(centers, st.hist_counts, width=width * 0.9, color="tab:green")
        ax.axvline(st.mean, color="k", ls="--", lw=1, label=f"mean {st.mean:.1f}")
        ax.set_title(f"ROI size, {name}")
        ax.set_xlabel("voxels")
        ax.set_ylabel("count")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def uncertainty_figure(stats: UncertaintyStats, path) -> None:
    """Histogram of per-sample spreads, one panel per class."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    finite_max = max((s for s in stats.spread if math.isfinite(s)), default=1.0)
    for ax, label, color in ((axes[0], 0, "tab:blue"), (axes[1], 1, "tab:red")):
        sel = stats.labels == label
        ax.hist(stats.spread[sel], bins=30, range=(0, max(finite_max, 1e-6)),
                color=color)
        mean = stats.class_spread_mean[label]
        std = stats.class_spread_std[label]
        ax.set_title(f"class {label}: spread {mean:.4f} (std {std:.4f})")
        ax.set_xlabel("per-sample spread")
    axes[0].set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
