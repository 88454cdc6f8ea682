"""Online streaming engine: per-frame scores in, one verdict per window out.

Tumbling mode (the default) buffers tau scores and emits a single averaged
verdict per non-overlapping window; sliding mode emits on every push once tau
scores are held. A Monitor is single-writer: pushes on one stream must be
serialized, distinct streams are independent.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

from .errors import NonMonotonicFrameIdError, NonPositiveFrameRateError

#: Substitute for the unbounded PSNR of a perfectly reconstructed frame.
#: Maximal in-domain evidence; keeps infinities out of window means.
PSNR_CAP_DB = 100.0

IN_DOMAIN = "InDomain"
OUT_OF_DOMAIN = "OutOfDomain"
UNCALIBRATED = "Uncalibrated"

TUMBLING = "tumbling"
SLIDING = "sliding"


@dataclass
class ScoreRecord:
    """One frame's reconstruction score (and optional segmentation accuracy)."""

    frame_id: int
    psnr: float
    domain: str | None = None
    miou: float | None = None
    capped: bool = False


@dataclass
class WindowVerdict:
    """Mean PSNR over one window plus its in/out-of-domain classification."""

    window_index: int
    first_frame: int
    last_frame: int
    mean_psnr: float
    verdict: str
    partial: bool = False


class Monitor:
    """Consumes ScoreRecords and emits a WindowVerdict per window of tau frames.

    Without a threshold every verdict is Uncalibrated; with one, a window is
    InDomain iff its mean PSNR >= threshold (ties count as in-domain).
    """

    def __init__(self, tau: int, threshold: float | None = None, mode: str = TUMBLING):
        if tau < 1:
            raise ValueError(f"tau must be >= 1, got {tau}")
        if mode not in (TUMBLING, SLIDING):
            raise ValueError(f"mode must be {TUMBLING!r} or {SLIDING!r}, got {mode!r}")
        self.tau = tau
        self.threshold = threshold
        self.mode = mode
        self._buffer: deque[ScoreRecord] = deque(maxlen=tau if mode == SLIDING else None)
        self._last_frame_id: int | None = None
        self._window_index = 0

    def push(self, record: ScoreRecord) -> WindowVerdict | None:
        """Buffer one score; returns a verdict when a window completes."""
        if self._last_frame_id is not None and record.frame_id <= self._last_frame_id:
            raise NonMonotonicFrameIdError(
                f"frame_id {record.frame_id} does not exceed previous {self._last_frame_id}"
            )
        self._last_frame_id = record.frame_id
        self._buffer.append(record)
        if len(self._buffer) < self.tau:
            return None
        verdict = self._emit(partial=False)
        if self.mode == TUMBLING:
            self._buffer.clear()
        return verdict

    def flush(self) -> WindowVerdict | None:
        """Emit a verdict over a pending partial tumbling window, if any."""
        if self.mode != TUMBLING or not self._buffer:
            return None
        verdict = self._emit(partial=True)
        self._buffer.clear()
        return verdict

    def _emit(self, partial: bool) -> WindowVerdict:
        total = 0.0
        for record in self._buffer:  # frame order: reruns must reproduce bits
            total += record.psnr
        mean = total / len(self._buffer)
        if self.threshold is None:
            label = UNCALIBRATED
        elif mean >= self.threshold:
            label = IN_DOMAIN
        else:
            label = OUT_OF_DOMAIN
        verdict = WindowVerdict(
            window_index=self._window_index,
            first_frame=self._buffer[0].frame_id,
            last_frame=self._buffer[-1].frame_id,
            mean_psnr=mean,
            verdict=label,
            partial=partial,
        )
        self._window_index += 1
        return verdict


def decision_latency(tau: int, frame_rate: float) -> float:
    """Seconds until one verdict: tau / frame_rate."""
    if frame_rate <= 0:
        raise NonPositiveFrameRateError(f"frame rate must be > 0 Hz, got {frame_rate}")
    return tau / frame_rate


# -- JSON-lines wire formats ---------------------------------------------


def record_to_json(record: ScoreRecord) -> str:
    doc = {"frame_id": record.frame_id, "domain": record.domain, "psnr": record.psnr}
    if record.miou is not None:
        doc["miou"] = record.miou
    if record.capped:
        doc["capped"] = True
    return json.dumps(doc)


def record_from_json(line: str, cap: float = PSNR_CAP_DB) -> ScoreRecord:
    """Parse one score-record line; non-finite PSNR is replaced by the cap."""
    doc = json.loads(line)
    try:
        frame_id = int(doc["frame_id"])
        value = float(doc["psnr"])
    except KeyError as exc:
        raise ValueError(f"score record missing {exc.args[0]!r}: {line.strip()}") from None
    capped = bool(doc.get("capped", False))
    if not math.isfinite(value):
        value = cap
        capped = True
    miou = doc.get("miou")
    return ScoreRecord(
        frame_id=frame_id,
        psnr=value,
        domain=doc.get("domain"),
        miou=None if miou is None else float(miou),
        capped=capped,
    )


def verdict_to_json(verdict: WindowVerdict) -> str:
    return json.dumps(
        {
            "window_index": verdict.window_index,
            "first_frame": verdict.first_frame,
            "last_frame": verdict.last_frame,
            "mean_psnr": verdict.mean_psnr,
            "verdict": verdict.verdict,
            "partial": verdict.partial,
        }
    )
