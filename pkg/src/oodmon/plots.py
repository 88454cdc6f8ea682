"""Matplotlib renderings of the report data: histograms, margin curve, scatter.

Figures are a convenience on top of the CSV/JSON outputs, which remain the
canonical (byte-reproducible) interface.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import RegressionResult
from .calibration import CalibrationResult, Histogram

_GROUP_COLORS = {"in": "tab:blue", "out": "tab:orange"}


def _color(label: str):
    return _GROUP_COLORS.get(label)


def save_histogram_figure(histograms: list[Histogram], path: str | os.PathLike, title: str = "") -> None:
    """Overlaid frequency bars, one series per histogram label."""
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    for hist in histograms:
        width = hist.bin_width
        centers = [hist.lo + (i + 0.5) * width for i in range(hist.bin_count)]
        ax.bar(centers, hist.counts, width=width, alpha=0.55,
               label=hist.label or None, color=_color(hist.label))
    ax.set_xlabel("PSNR (dB)")
    ax.set_ylabel("frequency")
    if title:
        ax.set_title(title)
    if any(h.label for h in histograms):
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_margin_curve_figure(result: CalibrationResult, path: str | os.PathLike) -> None:
    """Separation margin against window length, with tau_min marked if found."""
    taus = [tau for tau, _ in result.margin_curve]
    margins = [margin for _, margin in result.margin_curve]
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    ax.plot(taus, margins, marker=".", color="tab:blue")
    ax.axhline(0.0, color="black", linewidth=0.8, linestyle="--", alpha=0.6)
    if result.tau_min is not None:
        ax.axvline(result.tau_min, color="tab:green", linewidth=1.0, linestyle=":",
                   label=f"tau_min = {result.tau_min}")
        ax.legend()
    ax.set_xlabel("tau (window length)")
    ax.set_ylabel("separation margin (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scatter_figure(
    groups: dict[str, list[tuple[float, float]]],
    fits: dict[str, RegressionResult],
    path: str | os.PathLike,
    title: str = "",
) -> None:
    """PSNR/mIoU scatter per domain group with fitted regression lines."""
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    for tag, points in groups.items():
        if not points:
            continue
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.scatter(xs, ys, marker="*", s=36, alpha=0.7, label=tag or None, color=_color(tag))
        fit = fits.get(tag)
        if fit is not None:
            x_lo, x_hi = min(xs), max(xs)
            ax.plot(
                [x_lo, x_hi],
                [fit.intercept + fit.slope * x_lo, fit.intercept + fit.slope * x_hi],
                color=_color(tag) or "black",
                linewidth=1.2,
            )
    ax.set_xlabel("PSNR (dB)")
    ax.set_ylabel("mIoU")
    if title:
        ax.set_title(title)
    if any(groups):
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
