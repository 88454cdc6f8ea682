"""Binary PPM/PGM loading, validation, and writing.

Only the binary netpbm variants are supported: magic ``P5`` (single channel)
and ``P6`` (three channels), maxval 255, header tokens separated by
whitespace with ``#`` comments allowed, followed by one whitespace byte and
the raw raster. These formats are bit-exact and dependency-free, which keeps
corpus files reproducible byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import MalformedHeaderError, TruncatedPixelDataError, UnsupportedMaxvalError

_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(eq=False)
class Image:
    """Normalized raster: float64 intensities in [0, 1], shape (height, width, channels)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, np.newaxis]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"pixels must have shape (height, width, 1 or 3), got {np.shape(self.pixels)}")
        if px.size == 0:
            raise ValueError("image has no pixels")
        lo, hi = float(px.min()), float(px.max())
        if not (0.0 <= lo and hi <= 1.0):  # also rejects NaN
            raise ValueError(f"intensities outside [0, 1]: min={lo}, max={hi}")
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(eq=False)
class LabelMap:
    """Per-pixel class ids (0-255), shape (height, width)."""

    labels: np.ndarray

    def __post_init__(self):
        lm = np.ascontiguousarray(self.labels)
        if lm.ndim != 2 or lm.size == 0:
            raise ValueError(f"labels must be a non-empty (height, width) grid, got {np.shape(self.labels)}")
        if lm.dtype != np.uint8:
            if np.any(lm < 0) or np.any(lm > 255):
                raise ValueError("labels must be integers in 0..255")
            lm = lm.astype(np.uint8)
        self.labels = lm

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _next_token(data: bytes, pos: int, path) -> tuple[bytes, int]:
    # Skip whitespace and '#' comment lines between header tokens.
    n = len(data)
    while pos < n:
        byte = data[pos : pos + 1]
        if byte in _WHITESPACE:
            pos += 1
        elif byte == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeaderError(f"{path}: header ended early")
    return data[start:pos], pos


def _parse_header(data: bytes, path) -> tuple[bytes, int, int, int]:
    """Returns (magic, width, height, raster_offset); maxval is checked here."""
    if not data:
        raise MalformedHeaderError(f"{path}: empty file")
    magic, pos = _next_token(data, 0, path)
    if magic not in (b"P5", b"P6"):
        raise MalformedHeaderError(f"{path}: unsupported magic {magic!r} (binary P5/P6 only)")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(data, pos, path)
        try:
            value = int(token)
        except ValueError:
            raise MalformedHeaderError(f"{path}: non-numeric {name} {token!r}") from None
        fields.append(value)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"{path}: non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"{path}: maxval {maxval} not supported (must be 255)")
    # Exactly one whitespace byte separates the header from the raster.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise MalformedHeaderError(f"{path}: missing whitespace after maxval")
    return magic, width, height, pos + 1


def _read_raster(path, expected_channels: int | None = None) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, width, height, offset = _parse_header(data, path)
    channels = 1 if magic == b"P5" else 3
    if expected_channels is not None and channels != expected_channels:
        raise MalformedHeaderError(f"{path}: expected single-channel P5, got {magic.decode('ascii')}")
    count = width * height * channels
    if len(data) - offset < count:
        raise TruncatedPixelDataError(
            f"{path}: raster holds {len(data) - offset} bytes, header promises {count}"
        )
    raw = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)
    return raw.reshape(height, width, channels), channels


def load_image(path: str | os.PathLike) -> Image:
    """Load a binary PGM (P5) or PPM (P6) file as a normalized Image.

    Intensities are raw_byte / 255.0. Raises MalformedHeaderError,
    UnsupportedMaxvalError, or TruncatedPixelDataError naming the file.
    """
    raw, _ = _read_raster(path)
    return Image(raw.astype(np.float64) / 255.0)


def load_label_map(path: str | os.PathLike) -> LabelMap:
    """Load a binary PGM (P5) file as a LabelMap; bytes are class ids, unscaled."""
    raw, _ = _read_raster(path, expected_channels=1)
    return LabelMap(raw[:, :, 0].copy())


def write_image(img: Image, path: str | os.PathLike) -> None:
    """Write an Image as binary PGM (1 channel) or PPM (3 channels), maxval 255.

    Intensities quantize with round-half-away-from-zero, so any image loaded
    from disk round-trips exactly. I/O errors propagate as OSError.
    """
    magic = b"P5" if img.channels == 1 else b"P6"
    # floor(v*255 + 0.5) is round-half-away for v >= 0 and stays in 0..255.
    raw = np.floor(img.pixels * 255.0 + 0.5).astype(np.uint8)
    header = magic + b"\n" + f"{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(raw.tobytes())
