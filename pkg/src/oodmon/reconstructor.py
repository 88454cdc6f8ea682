"""Deterministic stand-in reconstructor and synthetic domain-shift corpora.

The stand-in mimics a lossy learned decoder with two knobs: spatial block
averaging (factor ``block``, element-count compression 1/block^2) and uniform
intensity quantization (``quant_bits``). It reconstructs smooth content almost
perfectly and destroys high-frequency content, which is exactly the fidelity
asymmetry the out-of-domain monitor feeds on.

All randomness flows through SplitMix64 so corpora are reproducible bit for
bit from their spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_io import Image

_MASK64 = (1 << 64) - 1
# SplitMix64 constants (Steele/Lea/Flood; fixed-increment Weyl sequence).
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB

SHIFT_KINDS = ("noise", "brightness", "invert")


def prng_next(state: int) -> tuple[int, float]:
    """One SplitMix64 step: (next_state, uniform real in [0, 1)).

    The real takes the output's high 53 bits over 2^53, so every
    implementation of the same recurrence yields identical streams.
    """
    state = (state + _GOLDEN_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX_1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_2) & _MASK64
    z ^= z >> 31
    return state, (z >> 11) * 2.0**-53


class SplitMix64:
    """Stateful convenience wrapper around prng_next."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def uniform(self) -> float:
        self.state, value = prng_next(self.state)
        return value

    def gaussian(self) -> float:
        # Box-Muller, cosine branch only: one normal per pair of uniforms.
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class StandInConfig:
    """Fidelity knobs of the stand-in codec.

    block: side of the averaged square block (spatial compression 1/block^2)
    quant_bits: intensity depth; block means are floored onto the
        2^quant_bits uniform levels i / 2^quant_bits.
    """

    block: int = 2
    quant_bits: int = 6

    def __post_init__(self):
        if self.block < 1:
            raise ValueError(f"block must be >= 1, got {self.block}")
        if not 1 <= self.quant_bits <= 8:
            raise ValueError(f"quant_bits must be in 1..8, got {self.quant_bits}")

    @property
    def compression_ratio(self) -> float:
        """Spatial element-count ratio, 1/block^2 (quantization shrinks it further)."""
        return 1.0 / (self.block * self.block)


def reconstruct(img: Image, cfg: StandInConfig = StandInConfig()) -> Image:
    """Lossy encode/decode: block means, quantized, upsampled back to size.

    Sizes not divisible by the block are edge-padded before blocking and
    cropped back afterwards, so the output always matches the input shape.
    Deterministic: pixels accumulate in row-major order within each block.
    """
    k = cfg.block
    px = img.pixels
    h, w, c = px.shape
    pad_h = (k - h % k) % k
    pad_w = (k - w % k) % k
    if pad_h or pad_w:
        px = np.pad(px, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
    acc = np.zeros((px.shape[0] // k, px.shape[1] // k, c))
    for dr in range(k):
        for dc in range(k):
            acc += px[dr::k, dc::k, :]
    means = acc / (k * k)
    levels = 1 << cfg.quant_bits
    quantized = np.minimum(np.floor(means * levels), levels - 1) / levels
    out = np.repeat(np.repeat(quantized, k, axis=0), k, axis=1)
    return Image(out[:h, :w, :])


@dataclass(frozen=True)
class CorpusSpec:
    """Synthetic two-domain corpus: smooth in-domain images plus shifted copies.

    shift_kind: "noise" (additive Gaussian, sigma=shift_amount),
    "brightness" (additive constant, delta=shift_amount), or "invert".
    """

    count: int
    width: int
    height: int
    shift_kind: str
    shift_amount: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"dimensions must be >= 1, got {self.width}x{self.height}")
        if self.shift_kind not in SHIFT_KINDS:
            raise ValueError(f"shift_kind must be one of {SHIFT_KINDS}, got {self.shift_kind!r}")
        if self.shift_kind == "noise" and self.shift_amount < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.shift_amount}")
        if self.shift_kind == "brightness" and not -1.0 <= self.shift_amount <= 1.0:
            raise ValueError(f"brightness delta must be in [-1, 1], got {self.shift_amount}")


def _smooth_image(rng: SplitMix64, width: int, height: int) -> Image:
    # Random quadratic surface, renormalized into [0.1, 0.9] so shifts and
    # noise have headroom before clipping. Low-frequency by construction:
    # block averaging reconstructs it nearly perfectly.
    coeffs = [2.0 * rng.uniform() - 1.0 for _ in range(6)]
    xs = (np.arange(width) / (width - 1) if width > 1 else np.zeros(1))[np.newaxis, :]
    ys = (np.arange(height) / (height - 1) if height > 1 else np.zeros(1))[:, np.newaxis]
    field = (
        coeffs[0]
        + coeffs[1] * xs
        + coeffs[2] * ys
        + coeffs[3] * xs * ys
        + coeffs[4] * xs * xs
        + coeffs[5] * ys * ys
    )
    lo, hi = float(field.min()), float(field.max())
    if hi - lo < 1e-12:
        return Image(np.full((height, width, 1), 0.5))
    scaled = 0.1 + (field - lo) * (0.8 / (hi - lo))
    return Image(scaled[:, :, np.newaxis])


def _shift_image(img: Image, spec: CorpusSpec, rng: SplitMix64) -> Image:
    px = img.pixels
    if spec.shift_kind == "invert":
        return Image(1.0 - px)
    if spec.shift_kind == "brightness":
        return Image(np.clip(px + spec.shift_amount, 0.0, 1.0))
    # noise: one Gaussian per pixel, drawn in row-major order
    noise = np.array([rng.gaussian() for _ in range(px.size)]).reshape(px.shape)
    return Image(np.clip(px + spec.shift_amount * noise, 0.0, 1.0))


def generate_corpus(spec: CorpusSpec) -> list[tuple[Image, str]]:
    """Emit spec.count images tagged "in" followed by their shifted copies tagged "out".

    Fully reproducible: equal specs produce bit-equal corpora.
    """
    rng = SplitMix64(spec.seed)
    base = [_smooth_image(rng, spec.width, spec.height) for _ in range(spec.count)]
    shifted = [_shift_image(img, spec, rng) for img in base]
    return [(img, "in") for img in base] + [(img, "out") for img in shifted]
