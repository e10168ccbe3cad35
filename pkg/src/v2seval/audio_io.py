"""Mono waveform type plus WAV file I/O and band-limited resampling.

The reader accepts RIFF/WAVE containers holding PCM 16-bit integer or IEEE
float32 data with one or two channels; stereo is downmixed by averaging.
The writer always emits mono PCM16 little-endian. The codec is implemented
directly on `struct` so that quantization and the error taxonomy are exact.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import firwin, resample_poly

from .exceptions import CorruptHeaderError, UnsupportedEncodingError
from .validation import as_float_array, check_finite

_PCM16_SCALE = 32768.0

# fmt-chunk codec ids
_FMT_PCM = 0x0001
_FMT_IEEE_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples in [-1, 1] at a fixed sample rate.

    Attributes
    ----------
    samples : np.ndarray
        1-D float64 amplitudes. Values are finite; decoded files obey
        ``|s| <= 1 + 1e-6``.
    sample_rate_hz : int
        Positive sampling rate (canonical 16000).
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        arr = as_float_array(self.samples, "samples", ndim=1)
        check_finite(arr, "samples")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CorruptHeaderError(f"truncated file while reading {what}")
    return data


def read_wav(path) -> Waveform:
    """Decode a RIFF/WAVE file into a mono Waveform.

    PCM16 samples are scaled by 1/32768; float32 samples are clamped to
    [-1, 1]. Stereo is downmixed by averaging the two channels.
    """
    path = Path(path)
    with open(path, "rb") as f:
        riff = _read_exact(f, 12, "RIFF header")
        if riff[:4] != b"RIFF" or riff[8:12] != b"WAVE":
            raise CorruptHeaderError(f"{path.name}: not a RIFF/WAVE file")

        fmt = None
        data = None
        while True:
            head = f.read(8)
            if len(head) == 0:
                break
            if len(head) != 8:
                raise CorruptHeaderError(f"{path.name}: truncated chunk header")
            cid, size = struct.unpack("<4sI", head)
            payload = _read_exact(f, size, f"chunk {cid!r}")
            if size % 2:  # RIFF chunks are word-aligned
                f.read(1)
            if cid == b"fmt ":
                fmt = payload
            elif cid == b"data":
                data = payload
            if fmt is not None and data is not None:
                break

        if fmt is None or data is None:
            raise CorruptHeaderError(f"{path.name}: missing fmt or data chunk")
        if len(fmt) < 16:
            raise CorruptHeaderError(f"{path.name}: fmt chunk too small")

        code, channels, rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
        if code == _FMT_EXTENSIBLE:
            if len(fmt) < 40:
                raise CorruptHeaderError(f"{path.name}: extensible fmt chunk too small")
            code = struct.unpack("<H", fmt[24:26])[0]

        if channels not in (1, 2):
            raise UnsupportedEncodingError(f"{path.name}: {channels} channels unsupported")
        if rate <= 0:
            raise CorruptHeaderError(f"{path.name}: invalid sample rate {rate}")

        if code == _FMT_PCM and bits == 16:
            raw = np.frombuffer(data[: len(data) - len(data) % (2 * channels)], dtype="<i2")
            samples = raw.astype(np.float64) / _PCM16_SCALE
        elif code == _FMT_IEEE_FLOAT and bits == 32:
            raw = np.frombuffer(data[: len(data) - len(data) % (4 * channels)], dtype="<f4")
            if raw.size and not np.all(np.isfinite(raw)):
                raise CorruptHeaderError(f"{path.name}: non-finite float samples")
            samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
        else:
            raise UnsupportedEncodingError(
                f"{path.name}: unsupported encoding (format 0x{code:04x}, {bits}-bit)"
            )

        if channels == 2:
            samples = samples[: len(samples) - len(samples) % 2].reshape(-1, 2).mean(axis=1)

        return Waveform(samples, rate)


def write_wav(w: Waveform, path) -> None:
    """Write a Waveform as mono PCM16 LE.

    Quantization rounds half away from zero and clamps to int16 range, so a
    write/read round trip is exact to 1/32768 per sample.
    """
    q = w.samples * _PCM16_SCALE
    q = np.copysign(np.floor(np.abs(q) + 0.5), q)
    q = np.clip(q, -32768, 32767).astype("<i2")
    data = q.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        _FMT_PCM,
        1,
        w.sample_rate_hz,
        w.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(data),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(data)


def _kaiser_lowpass(up: int, down: int, cutoff_ratio: float = 0.95) -> np.ndarray:
    """Windowed-sinc FIR for polyphase resampling.

    Cutoff sits at `cutoff_ratio` times the Nyquist of the lower rate,
    expressed relative to the upsampled rate.
    """
    max_rate = max(up, down)
    half_len = 16 * max_rate
    return firwin(2 * half_len + 1, cutoff_ratio / max_rate, window=("kaiser", 8.0))


def resample(w: Waveform, target_hz: int) -> Waveform:
    """Band-limited polyphase resampling to `target_hz`.

    Output length is round(len * target / source); equal rates return the
    input unchanged.
    """
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if target_hz == w.sample_rate_hz:
        return w
    n_out = int(math.floor(len(w) * target_hz / w.sample_rate_hz + 0.5))
    if len(w) == 0:
        return Waveform(np.zeros(0), target_hz)

    g = math.gcd(target_hz, w.sample_rate_hz)
    up, down = target_hz // g, w.sample_rate_hz // g
    y = resample_poly(w.samples, up, down, window=_kaiser_lowpass(up, down))
    if len(y) < n_out:
        y = np.concatenate([y, np.zeros(n_out - len(y))])
    return Waveform(y[:n_out], target_hz)
