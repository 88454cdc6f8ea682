"""Reconstruction-error vs segmentation-accuracy correlation.

Regressions are computed per domain group: pooling in- and out-of-domain
points mixes two populations whose mIoU levels differ for reasons PSNR does
not explain, so a pooled fit is only produced on explicit request and is
flagged accordingly by the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .calibration import windowed_means
from .errors import DegenerateXError, EmptyInputError, MissingMiouError, TooFewPointsError
from .monitor import ScoreRecord


@dataclass
class RegressionResult:
    """Ordinary least-squares line over (psnr, miou) points."""

    slope: float
    intercept: float
    n: int
    group: str = ""
    tau: int = 1

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "tau": self.tau,
            "n": self.n,
            "slope": self.slope,
            "intercept": self.intercept,
        }


def regress(
    points: Sequence[tuple[float, float]], group: str = "", tau: int = 1
) -> RegressionResult:
    """Ordinary least squares: slope = cov(x, y) / var(x)."""
    n = len(points)
    if n < 2:
        raise TooFewPointsError(f"need >= 2 points, got {n}")
    x_mean = 0.0
    y_mean = 0.0
    for x, y in points:
        x_mean += x
        y_mean += y
    x_mean /= n
    y_mean /= n
    sxx = 0.0
    sxy = 0.0
    for x, y in points:
        dx = x - x_mean
        sxx += dx * dx
        sxy += dx * (y - y_mean)
    if sxx == 0.0:
        raise DegenerateXError("all psnr values are equal; slope undefined")
    slope = sxy / sxx
    return RegressionResult(slope=slope, intercept=y_mean - slope * x_mean, n=n, group=group, tau=tau)


def windowed_pairs(records: Sequence[ScoreRecord], tau: int) -> list[tuple[float, float]]:
    """(mean psnr, mean miou) per full tumbling window of tau records.

    Every record must carry miou; the trailing partial window is dropped,
    mirroring calibration.
    """
    missing = [r.frame_id for r in records if r.miou is None]
    if missing:
        shown = ", ".join(str(f) for f in missing[:5])
        raise MissingMiouError(f"{len(missing)} record(s) without miou (frames {shown}...)")
    psnr_means = windowed_means([r.psnr for r in records], tau)
    miou_means = windowed_means([r.miou for r in records], tau)
    return list(zip(psnr_means, miou_means))


def group_summary(records: Sequence[ScoreRecord]) -> dict[str, dict]:
    """Per-domain statistics: count plus mean/min/max of psnr and of miou.

    The miou block is None for groups where no record carries one. Groups
    appear in first-seen order.
    """
    if len(records) == 0:
        raise EmptyInputError("no records to summarize")
    groups: dict[str, list[ScoreRecord]] = {}
    for record in records:
        groups.setdefault(record.domain or "", []).append(record)
    summary = {}
    for tag, members in groups.items():
        psnrs = [r.psnr for r in members]
        mious = [r.miou for r in members if r.miou is not None]
        summary[tag] = {
            "count": len(members),
            "psnr": _stats(psnrs),
            "miou": _stats(mious) if mious else None,
        }
    return summary


def _stats(values: list[float]) -> dict:
    total = 0.0
    for value in values:
        total += value
    return {"mean": total / len(values), "min": min(values), "max": max(values)}
