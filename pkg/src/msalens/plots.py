"""Matplotlib renderings for the report and explain paths.

Figures are written to files next to the delimited report output; no
interactive backend is assumed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .criteria import CRITERIA, default_mapping
from .explain import TokenAttribution
from .metrics import CalibrationReport, TrendReport


def _criterion_labels() -> list[str]:
    mapping = default_mapping()
    return [mapping.info(c).display_name for c in CRITERIA]


def render_attribution(attribution: TokenAttribution, path: str | Path, title: str = "") -> None:
    """Token heatmap: red boosts the prediction, blue suppresses, intensity by |phi|."""
    tokens = attribution.tokens
    phi = np.array(attribution.phi)
    scale = np.abs(phi).max() or 1.0

    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(tokens)), 1.8))
    ax.set_axis_off()
    x = 0.01
    for token, value in zip(tokens, phi):
        intensity = abs(value) / scale
        color = (1.0, 1.0 - 0.75 * intensity, 1.0 - 0.75 * intensity) if value >= 0 else (
            1.0 - 0.75 * intensity,
            1.0 - 0.75 * intensity,
            1.0,
        )
        text = ax.text(
            x,
            0.55,
            token,
            fontsize=12,
            ha="left",
            va="center",
            bbox={"facecolor": color, "edgecolor": "none", "pad": 2.5},
            transform=ax.transAxes,
        )
        fig.canvas.draw()
        bbox = text.get_window_extent().transformed(ax.transAxes.inverted())
        x = bbox.x1 + 0.012
    caption = title or f"base {attribution.base_value:.3f}, sum(phi) {attribution.total():+.3f}"
    ax.text(0.01, 0.08, caption, fontsize=9, color="dimgray", transform=ax.transAxes)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_trend(report: TrendReport, path: str | Path) -> None:
    """Grouped bars: one group per facet value, one bar per criterion."""
    labels = _criterion_labels()
    rows = report.rows
    n_groups = len(rows)
    n_bars = len(CRITERIA)
    width = 0.8 / n_bars

    fig, ax = plt.subplots(figsize=(max(7.0, 1.6 * n_groups), 4.2))
    xs = np.arange(n_groups)
    cmap = plt.get_cmap("tab10")
    for j, criterion in enumerate(CRITERIA):
        values = [row.fractions[criterion.value] for row in rows]
        ax.bar(xs + (j - n_bars / 2 + 0.5) * width, values, width, label=labels[j], color=cmap(j % 10))
    ax.set_xticks(xs)
    ax.set_xticklabels(
        [f"{row.facet_value}\n(n={row.statement_count})" for row in rows], fontsize=8
    )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("compliance fraction")
    ax.set_title(f"Compliance proportion by {report.facet} for each criterion")
    ax.legend(fontsize=7, ncol=3, loc="upper center", bbox_to_anchor=(0.5, -0.18))
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_calibration(report: CalibrationReport, path: str | Path, label: str = "") -> None:
    """Reliability curve over the occupied 5-bin points, with the y=x reference."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot([0, 1], [0, 1], "k--", linewidth=1, label="perfectly calibrated")
    xs = [b.mean_predicted for b in report.curve]
    ys = [b.fraction_positive for b in report.curve]
    ax.plot(xs, ys, "o-", label=label or "model")
    ax.set_xlabel("mean predicted probability")
    ax.set_ylabel("fraction of positives")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title(f"Calibration (ECE = {report.ece:.4f})")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
