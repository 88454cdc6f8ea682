"""Offline calibration: windowed means, histograms, and the minimal-tau search.

Calibration consumes two pre-segmented score streams (one per domain), windows
each into non-overlapping chunks, and finds the smallest window length tau at
which every in-domain window mean exceeds every out-of-domain one. Trailing
partial windows are dropped here: a short window has different variance and
would break the tau semantics (the online monitor flags partial windows
instead of dropping them).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInputError, NoFullWindowError

WINDOWING_NOTE = "tumbling windows in stream order; trailing partial windows dropped"


def windowed_means(scores: Sequence[float], tau: int) -> list[float]:
    """Means of consecutive non-overlapping windows of tau scores.

    A trailing partial window is dropped. Accumulation is left-to-right in
    stream order, matching the online monitor bit for bit.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if len(scores) == 0:
        raise EmptyInputError("no scores to window")
    full = len(scores) // tau
    if full == 0:
        raise NoFullWindowError(f"{len(scores)} scores hold no full window of {tau}")
    means = []
    for w in range(full):
        total = 0.0
        for value in scores[w * tau : (w + 1) * tau]:
            total += value
        means.append(total / tau)
    return means


@dataclass
class Histogram:
    """Fixed-bin frequency table over [lo, hi]; the final bin is closed."""

    bin_count: int
    lo: float
    hi: float
    counts: list[int]
    label: str = ""

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.bin_count

    def edges(self, index: int) -> tuple[float, float]:
        width = self.bin_width
        return self.lo + index * width, self.lo + (index + 1) * width


def build_histogram(
    scores: Sequence[float],
    bins: int = 50,
    lo: float | None = None,
    hi: float | None = None,
    label: str = "",
) -> Histogram:
    """Bin scores into `bins` equal-width bins over [lo, hi].

    Bin i spans [lo + i*w, lo + (i+1)*w); the final bin also includes hi.
    Scores outside the range clamp into the end bins. A missing range
    defaults to [floor(min), ceil(max)] of the scores.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if len(scores) == 0:
        raise EmptyInputError("no scores to bin")
    if lo is None:
        lo = math.floor(min(scores))
    if hi is None:
        hi = math.ceil(max(scores))
        if hi <= lo:
            hi = lo + 1.0
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    width = (hi - lo) / bins
    counts = [0] * bins
    for value in scores:
        index = int(math.floor((value - lo) / width))
        if index < 0:
            index = 0
        elif index >= bins:
            index = bins - 1
        counts[index] += 1
    return Histogram(bin_count=bins, lo=float(lo), hi=float(hi), counts=counts, label=label)


def write_histogram_csv(hist: Histogram, path: str | os.PathLike) -> None:
    """CSV rows `bin_lo,bin_hi,count,label`, one per bin."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count", "label"])
        for i, count in enumerate(hist.counts):
            bin_lo, bin_hi = hist.edges(i)
            writer.writerow([bin_lo, bin_hi, count, hist.label])


def check_separation(in_means: Sequence[float], out_means: Sequence[float]) -> tuple[bool, float]:
    """(separated, margin) with margin = min(in_means) - max(out_means).

    Separation requires a strictly positive margin; in-domain is the
    high-PSNR side. A zero margin counts as overlap.
    """
    if len(in_means) == 0 or len(out_means) == 0:
        raise EmptyInputError("both mean lists must be non-empty")
    margin = min(in_means) - max(out_means)
    return margin > 0, margin


@dataclass
class CalibrationResult:
    """Outcome of the minimal-tau search.

    tau_min/threshold/margin are None when no tau within the scanned range
    separates the sets. threshold is the midpoint of the gap at tau_min.
    """

    tau_min: int | None
    threshold: float | None
    margin: float | None
    margin_curve: list[tuple[int, float]]

    @property
    def separated(self) -> bool:
        return self.tau_min is not None

    def to_dict(self) -> dict:
        return {
            "tau_min": self.tau_min,
            "threshold": self.threshold,
            "margin": self.margin,
            "separated": self.separated,
            "margin_curve": [[tau, margin] for tau, margin in self.margin_curve],
            "windowing": WINDOWING_NOTE,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CalibrationResult":
        return cls(
            tau_min=doc.get("tau_min"),
            threshold=doc.get("threshold"),
            margin=doc.get("margin"),
            margin_curve=[(int(t), float(m)) for t, m in doc.get("margin_curve", [])],
        )


def find_min_tau(
    in_scores: Sequence[float], out_scores: Sequence[float], tau_max: int
) -> CalibrationResult:
    """Scan tau = 1..tau_max for the smallest window length with full separation.

    Every tau is evaluated (the margin is not monotone in tau for finite
    streams), recording the whole margin curve. The scan stops early only
    when one set no longer holds a full window.
    """
    if tau_max < 1:
        raise ValueError(f"tau_max must be >= 1, got {tau_max}")
    if len(in_scores) == 0 or len(out_scores) == 0:
        raise EmptyInputError("both score sets must be non-empty")
    curve: list[tuple[int, float]] = []
    tau_min: int | None = None
    threshold: float | None = None
    margin_at_min: float | None = None
    for tau in range(1, tau_max + 1):
        if tau > len(in_scores) or tau > len(out_scores):
            break
        in_means = windowed_means(in_scores, tau)
        out_means = windowed_means(out_scores, tau)
        separated, margin = check_separation(in_means, out_means)
        curve.append((tau, margin))
        if separated and tau_min is None:
            tau_min = tau
            margin_at_min = margin
            threshold = (min(in_means) + max(out_means)) / 2.0
    return CalibrationResult(tau_min, threshold, margin_at_min, curve)
