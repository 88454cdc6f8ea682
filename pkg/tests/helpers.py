"""Shared fixture builders and independent oracles for the test suite."""

import subprocess
import sys

import numpy as np


def pgm_bytes(width, height, raster, maxval=255):
    return b"P5\n%d %d\n%d\n" % (width, height, maxval) + bytes(raster)


def ppm_bytes(width, height, raster, maxval=255):
    return b"P6\n%d %d\n%d\n" % (width, height, maxval) + bytes(raster)


def run_cli(*argv, stdin_text=None, cwd=None):
    """Run the CLI in a subprocess; returns (exit_code, stdout, stderr)."""
    proc = subprocess.run(
        [sys.executable, "-m", "oodmon", *map(str, argv)],
        input=stdin_text,
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=120,
    )
    return proc.returncode, proc.stdout, proc.stderr


# -- independent oracles ---------------------------------------------------


def chunk_means(scores, tau):
    """Brute-force tumbling means: full consecutive chunks, left-to-right sums."""
    means = []
    for start in range(0, len(scores) - tau + 1, tau):
        total = 0.0
        for value in scores[start : start + tau]:
            total += value
        means.append(total / tau)
    return means


def per_pixel_miou(gt, pred, num_classes):
    """mIoU recounted per pixel, independently of any confusion matrix."""
    gt = np.asarray(gt).ravel()
    pred = np.asarray(pred).ravel()
    ious = []
    for c in range(num_classes):
        tp = int(np.sum((gt == c) & (pred == c)))
        fp = int(np.sum((gt != c) & (pred == c)))
        fn = int(np.sum((gt == c) & (pred != c)))
        union = tp + fp + fn
        if union > 0:
            ious.append(tp / union)
    return sum(ious) / len(ious)


def ols_slope_intercept(points):
    """Closed-form least squares evaluated longhand."""
    n = len(points)
    x_mean = sum(p[0] for p in points) / n
    y_mean = sum(p[1] for p in points) / n
    num = sum((x - x_mean) * (y - y_mean) for x, y in points)
    den = sum((x - x_mean) ** 2 for x, _ in points)
    slope = num / den
    return slope, y_mean - slope * x_mean


def splitmix64_reference(state):
    """The published SplitMix64 recurrence, written out independently."""
    mask = (1 << 64) - 1
    state = (state + 0x9E3779B97F4A7C15) & mask
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    z = z ^ (z >> 31)
    return state, z
