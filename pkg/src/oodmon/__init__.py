"""Runtime out-of-domain detection from reconstruction error.

A lossy reconstruction of an input frame is close to the original while the
frame resembles what the reconstructor was built for, and degrades when it
does not. This package scores that effect per frame as PSNR, averages scores
over windows of ``tau`` consecutive frames, calibrates the smallest ``tau``
that fully separates in-domain from out-of-domain traffic, and relates the
scores to segmentation accuracy (mIoU).
"""

__version__ = "0.1.0"

from .analysis import RegressionResult, group_summary, regress, windowed_pairs
from .calibration import (
    CalibrationResult,
    Histogram,
    build_histogram,
    check_separation,
    find_min_tau,
    windowed_means,
)
from .image_io import Image, LabelMap, load_image, load_label_map, write_image
from .metrics import ConfusionMatrix, LossWeights, combined_loss, confusion, miou, mse, psnr
from .monitor import Monitor, ScoreRecord, WindowVerdict, decision_latency
from .reconstructor import CorpusSpec, SplitMix64, StandInConfig, generate_corpus, prng_next, reconstruct

__all__ = [
    "CalibrationResult",
    "ConfusionMatrix",
    "CorpusSpec",
    "Histogram",
    "Image",
    "LabelMap",
    "LossWeights",
    "Monitor",
    "RegressionResult",
    "ScoreRecord",
    "SplitMix64",
    "StandInConfig",
    "WindowVerdict",
    "build_histogram",
    "check_separation",
    "combined_loss",
    "confusion",
    "decision_latency",
    "find_min_tau",
    "generate_corpus",
    "group_summary",
    "load_image",
    "load_label_map",
    "miou",
    "mse",
    "prng_next",
    "psnr",
    "reconstruct",
    "regress",
    "windowed_means",
    "windowed_pairs",
    "write_image",
]
