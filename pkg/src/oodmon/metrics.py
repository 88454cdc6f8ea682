"""Numerical kernels: MSE, PSNR, the weighted loss combiner, and mIoU."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyMatrixError,
    IdenticalImagesError,
    LabelOutOfRangeError,
    ShapeMismatchError,
)
from .image_io import Image, LabelMap


def sequential_sum(values: np.ndarray) -> float:
    # Left-to-right accumulation in index order. np.sum's pairwise
    # reassociation would change low bits and break byte-identical reruns.
    flat = np.ravel(values)
    if flat.size == 0:
        return 0.0
    return float(np.add.accumulate(flat, dtype=np.float64)[-1])


def mse(a: Image, b: Image) -> float:
    """Mean squared difference over all pixels and channels."""
    if a.pixels.shape != b.pixels.shape:
        raise ShapeMismatchError(f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    diff = a.pixels - b.pixels
    return sequential_sum(diff * diff) / diff.size


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB; peak is 1.0 by the intensity normalization."""
    err = mse(a, b)
    if err == 0.0:
        raise IdenticalImagesError("images are identical; PSNR is unbounded")
    return -10.0 * math.log10(err)


@dataclass(frozen=True)
class LossWeights:
    """Weights of the KLD and MSE terms in the reconstruction training loss."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError(f"weights must be non-negative and not both zero: alpha={self.alpha}, beta={self.beta}")


def combined_loss(kld: float, mse_value: float, weights: LossWeights) -> float:
    """Weighted sum kld*alpha + mse*beta."""
    return kld * weights.alpha + mse_value * weights.beta


@dataclass(eq=False)
class ConfusionMatrix:
    """counts[g][p] = pixels of ground-truth class g predicted as class p."""

    counts: np.ndarray

    def __post_init__(self):
        cm = np.asarray(self.counts, dtype=np.int64)
        if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 1:
            raise ValueError(f"counts must be a square grid, got {np.shape(self.counts)}")
        if np.any(cm < 0):
            raise ValueError("counts must be non-negative")
        self.counts = cm

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(gt: LabelMap, pred: LabelMap, num_classes: int) -> ConfusionMatrix:
    """Per-pixel confusion counts between a ground-truth and a predicted label map."""
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    if gt.labels.shape != pred.labels.shape:
        raise ShapeMismatchError(f"label map shapes differ: {gt.labels.shape} vs {pred.labels.shape}")
    g = gt.labels.astype(np.int64).ravel()
    p = pred.labels.astype(np.int64).ravel()
    worst = int(max(g.max(), p.max()))
    if worst >= num_classes:
        raise LabelOutOfRangeError(f"label {worst} outside 0..{num_classes - 1}")
    flat = np.bincount(g * num_classes + p, minlength=num_classes * num_classes)
    return ConfusionMatrix(flat.reshape(num_classes, num_classes))


def miou(cm: ConfusionMatrix) -> float:
    """Mean intersection-over-union across classes present in either map.

    IoU_c = TP / (TP + FP + FN); classes with zero union are excluded from
    the mean so absent classes cannot inflate or deflate the score.
    """
    counts = cm.counts
    if counts.sum() == 0:
        raise EmptyMatrixError("confusion matrix holds no counts")
    tp = np.diag(counts)
    union = counts.sum(axis=1) + counts.sum(axis=0) - tp
    total = 0.0
    present = 0
    for c in range(cm.num_classes):  # class order, for reproducible rounding
        if union[c] > 0:
            total += float(tp[c]) / float(union[c])
            present += 1
    return total / present
