"""Temporal alignment between 25 Hz visual features and 100 Hz mel frames.

Linear reshaping losslessly trades channel depth for time resolution: a
(T, C) feature matrix becomes (k*T, C/k) by splitting each row into k
consecutive rows, multiplying the frame rate by k. With 25 Hz features and
k=4 the output lands on the 100 Hz mel grid.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    GrossMisalignmentError,
    IndivisibleChannelsError,
    ParseError,
    ShapeMismatchError,
)
from .spectral import MelSpectrogram
from .validation import as_float_array, check_finite

_MAGIC = b"FEAT"

# frame-count slack tolerated by reconcile_lengths; padding conventions can
# legitimately differ by an edge frame or two, anything larger is bad data
RECONCILE_TOLERANCE = 2


@dataclass(frozen=True)
class FeatureSequence:
    """A (T, C) real feature matrix at a fixed frame rate."""

    values: np.ndarray
    frame_rate_hz: int

    def __post_init__(self):
        arr = as_float_array(self.values, "values", ndim=2)
        check_finite(arr, "values")
        if arr.shape[1] < 1:
            raise ShapeMismatchError("feature sequences need at least one channel")
        if self.frame_rate_hz <= 0:
            raise ValueError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        object.__setattr__(self, "values", arr)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


def linear_reshape_upsample(f: FeatureSequence, k: int) -> FeatureSequence:
    """Reshape (T, C) -> (k*T, C/k) row-major; the value multiset is preserved."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if f.n_channels % k:
        raise IndivisibleChannelsError(f"C={f.n_channels} not divisible by k={k}")
    values = f.values.reshape(f.n_frames * k, f.n_channels // k)
    return FeatureSequence(values, f.frame_rate_hz * k)


def reconcile_lengths(
    a: MelSpectrogram, b: MelSpectrogram
) -> tuple[MelSpectrogram, MelSpectrogram]:
    """Truncate both mels to the shorter frame count.

    Differences beyond RECONCILE_TOLERANCE frames indicate mismatched inputs
    rather than padding edge effects and raise GrossMisalignmentError.
    """
    if a.n_mels != b.n_mels:
        raise ShapeMismatchError(f"mel band counts differ: {a.n_mels} vs {b.n_mels}")
    if a.frame_rate_hz != b.frame_rate_hz:
        raise ShapeMismatchError(
            f"frame rates differ: {a.frame_rate_hz} vs {b.frame_rate_hz}"
        )
    delta = abs(a.n_frames - b.n_frames)
    if delta > RECONCILE_TOLERANCE:
        raise GrossMisalignmentError(
            f"frame counts differ by {delta} (> {RECONCILE_TOLERANCE}): "
            f"{a.n_frames} vs {b.n_frames}"
        )
    n = min(a.n_frames, b.n_frames)
    if a.n_frames != n:
        a = MelSpectrogram(a.values[:n], a.frame_rate_hz, a.log_floor)
    if b.n_frames != n:
        b = MelSpectrogram(b.values[:n], b.frame_rate_hz, b.log_floor)
    return a, b


def mel_l1(gt: MelSpectrogram, gen: MelSpectrogram) -> float:
    """Mean absolute elementwise difference between two equal-shape mels.

    The sum-norm equivalent is this value times the element count.
    """
    if gt.values.shape != gen.values.shape:
        raise ShapeMismatchError(
            f"mel shapes differ: {gt.values.shape} vs {gen.values.shape}"
        )
    if gt.values.size == 0:
        return 0.0
    return float(np.mean(np.abs(gt.values - gen.values)))


def save_features(f: FeatureSequence, path) -> None:
    """Write the binary FEAT format (magic, T, C, rate, float32 row-major)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", f.n_frames, f.n_channels, f.frame_rate_hz))
        fh.write(f.values.astype("<f4").tobytes())


def load_features(path) -> FeatureSequence:
    """Read a FEAT file produced by an external feature frontend."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise ParseError(f"{path.name}: not a FEAT file")
    n_frames, n_channels, rate = struct.unpack("<III", raw[4:16])
    expected = 16 + 4 * n_frames * n_channels
    if len(raw) < expected:
        raise ParseError(f"{path.name}: truncated FEAT payload")
    values = np.frombuffer(raw[16:expected], dtype="<f4").astype(np.float64)
    return FeatureSequence(values.reshape(n_frames, n_channels), rate)
