"""Deterministic preprocessing of grayscale frame stacks.

Covers the clip-level geometry used to prepare mouth-region video: center
cropping for evaluation, seeded random crop plus whole-clip horizontal flip
for training augmentation, and clip-length limiting. Crop offsets and the
flip decision are drawn once per clip so lip-motion continuity survives.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import CropTooLargeError, ParseError
from .validation import as_float_array, check_finite

_MAGIC = b"FRMS"
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class FrameStack:
    """(T, H, W) grayscale intensities in [0, 1] at a fixed frame rate."""

    values: np.ndarray
    fps: int = 25

    def __post_init__(self):
        arr = as_float_array(self.values, "values", ndim=3)
        check_finite(arr, "values")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError("frames must be at least 1x1")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("intensities must lie in [0, 1]")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "values", arr)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


class SplitMix64:
    """Minimal splitmix64 generator; fixed draw order keeps clips reproducible."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        return self.next_u64() % n

    def next_bit(self) -> bool:
        return bool(self.next_u64() >> 63)


def _check_crop(s: FrameStack, size: int) -> None:
    if size < 1:
        raise ValueError(f"crop size must be positive, got {size}")
    if size > s.height or size > s.width:
        raise CropTooLargeError(f"crop {size} exceeds frame size {s.height}x{s.width}")


def center_crop(s: FrameStack, size: int) -> FrameStack:
    """Spatially centered size x size crop; offsets floor((H-size)/2), floor((W-size)/2)."""
    _check_crop(s, size)
    oy = (s.height - size) // 2
    ox = (s.width - size) // 2
    return FrameStack(s.values[:, oy : oy + size, ox : ox + size], s.fps)


def random_crop_flip(s: FrameStack, size: int, seed: int) -> FrameStack:
    """Training augmentation: one random crop offset per clip, 50% whole-clip flip.

    Three splitmix64 draws in fixed order (row offset, column offset, flip
    bit), so output is fully determined by the seed.
    """
    _check_crop(s, size)
    rng = SplitMix64(seed)
    oy = rng.next_below(s.height - size + 1)
    ox = rng.next_below(s.width - size + 1)
    flip = rng.next_bit()
    values = s.values[:, oy : oy + size, ox : ox + size]
    if flip:
        values = values[:, :, ::-1]
    return FrameStack(np.ascontiguousarray(values), s.fps)


def limit_clip(s: FrameStack, max_seconds: float = 4.0) -> FrameStack:
    """Keep the first min(T, floor(max_seconds * fps)) frames."""
    if max_seconds <= 0:
        raise ValueError(f"max_seconds must be positive, got {max_seconds}")
    keep = min(s.n_frames, int(math.floor(max_seconds * s.fps)))
    return FrameStack(s.values[:keep], s.fps)


def save_frames(s: FrameStack, path) -> None:
    """Write the binary FRMS format (magic, T, H, W, fps, uint8 intensities)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", s.n_frames, s.height, s.width, s.fps))
        data = np.floor(s.values * 255.0 + 0.5)
        fh.write(data.astype(np.uint8).tobytes())


def load_frames(path) -> FrameStack:
    """Read a FRMS file; intensities are uint8 / 255."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 20 or raw[:4] != _MAGIC:
        raise ParseError(f"{path.name}: not a FRMS file")
    t, h, w, fps = struct.unpack("<IIII", raw[4:20])
    expected = 20 + t * h * w
    if len(raw) < expected:
        raise ParseError(f"{path.name}: truncated FRMS payload")
    values = np.frombuffer(raw[20:expected], dtype=np.uint8).astype(np.float64) / 255.0
    return FrameStack(values.reshape(t, h, w), fps)
