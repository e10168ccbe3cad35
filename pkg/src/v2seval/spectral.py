"""STFT analysis/synthesis and log-mel extraction at 100 frames per second.

Frame geometry: Hann window of 400 samples, hop 160, FFT 512, with the
signal reflect-padded by half a window on both ends and a frame count of
floor(len / hop). At 16 kHz this yields exactly 100 mel frames per second,
so a 25 fps video clip maps to 4x as many mel frames as video frames.

Log compression is natural-log of the mel magnitudes clamped at a floor of
1e-5; silence therefore maps to log(1e-5) everywhere.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import Waveform
from .exceptions import (
    EmptySignalError,
    ParseError,
    RateMismatchError,
    ShapeMismatchError,
)
from .validation import as_float_array, check_finite

_MAGIC = b"MELS"


@dataclass(frozen=True)
class SpectralConfig:
    """Frame geometry and filterbank parameters for mel extraction."""

    sample_rate_hz: int = 16000
    hop: int = 160
    win: int = 400
    n_fft: int = 512
    n_mels: int = 128
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-5

    def __post_init__(self):
        if not (0 < self.hop <= self.win <= self.n_fft):
            raise ValueError(f"need 0 < hop <= win <= n_fft, got {self.hop}/{self.win}/{self.n_fft}")
        if self.fmax > self.sample_rate_hz / 2:
            raise ValueError(f"fmax {self.fmax} above Nyquist of {self.sample_rate_hz} Hz")
        if not (0 <= self.fmin < self.fmax):
            raise ValueError(f"need 0 <= fmin < fmax, got {self.fmin}/{self.fmax}")
        if self.sample_rate_hz % self.hop:
            raise ValueError("sample_rate_hz must be divisible by hop for an integer frame rate")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")

    @property
    def frame_rate_hz(self) -> int:
        return self.sample_rate_hz // self.hop

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1


@dataclass(frozen=True)
class MelSpectrogram:
    """Log-mel matrix of shape (frames, n_mels) at a fixed frame rate.

    Entries are natural-log mel magnitudes, never below log(log_floor).
    """

    values: np.ndarray
    frame_rate_hz: int = 100
    log_floor: float = 1e-5

    def __post_init__(self):
        arr = as_float_array(self.values, "values", ndim=2)
        check_finite(arr, "values")
        if self.frame_rate_hz <= 0:
            raise ValueError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        if arr.size and arr.min() < math.log(self.log_floor) - 1e-6:
            raise ValueError("log-mel entries below the clamp floor")
        object.__setattr__(self, "values", arr)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_mels(self) -> int:
        return self.values.shape[1]


@functools.lru_cache(maxsize=8)
def _hann(win: int) -> np.ndarray:
    # periodic Hann, zero at sample 0
    n = np.arange(win)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / win)


def _pad_signal(x: np.ndarray, pad: int) -> np.ndarray:
    if len(x) > pad:
        return np.pad(x, pad, mode="reflect")
    # degenerate ultra-short input: reflect padding is undefined, zero-pad
    return np.pad(x, pad, mode="constant")


def _frame_matrix(x_pad: np.ndarray, n_frames: int, cfg: SpectralConfig) -> np.ndarray:
    idx = np.arange(cfg.win)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    return x_pad[idx]


def _analyze_frames(frames: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    return np.fft.rfft(frames * _hann(cfg.win)[None, :], n=cfg.n_fft, axis=1)


def _synthesize_frames(spec: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    """Least-squares overlap-add inverse of `_analyze_frames`.

    Returns the padded-domain signal of length (frames - 1) * hop + win,
    normalized by the overlap-added squared window (floored at 1e-8).
    """
    n_frames = spec.shape[0]
    w = _hann(cfg.win)
    frames = np.fft.irfft(spec, n=cfg.n_fft, axis=1)[:, : cfg.win] * w[None, :]
    length = (n_frames - 1) * cfg.hop + cfg.win
    y = np.zeros(length)
    norm = np.zeros(length)
    w_sq = w * w
    for i in range(n_frames):
        start = i * cfg.hop
        y[start : start + cfg.win] += frames[i]
        norm[start : start + cfg.win] += w_sq
    return y / np.maximum(norm, 1e-8)


def stft(w: Waveform, cfg: SpectralConfig = SpectralConfig()) -> np.ndarray:
    """Short-time Fourier transform, shape (floor(len/hop), n_fft/2 + 1)."""
    if w.sample_rate_hz != cfg.sample_rate_hz:
        raise RateMismatchError(
            f"waveform at {w.sample_rate_hz} Hz, config expects {cfg.sample_rate_hz} Hz"
        )
    if len(w) < 1:
        raise EmptySignalError("cannot analyze an empty signal")
    n_frames = len(w) // cfg.hop
    x_pad = _pad_signal(w.samples, cfg.win // 2)
    if n_frames == 0:
        return np.zeros((0, cfg.n_bins), dtype=np.complex128)
    return _analyze_frames(_frame_matrix(x_pad, n_frames, cfg), cfg)


def istft(spec: np.ndarray, cfg: SpectralConfig = SpectralConfig()) -> Waveform:
    """Windowed overlap-add inverse; output length is frames * hop."""
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != cfg.n_bins:
        raise ShapeMismatchError(f"expected (frames, {cfg.n_bins}), got {spec.shape}")
    n_frames = spec.shape[0]
    if n_frames == 0:
        return Waveform(np.zeros(0), cfg.sample_rate_hz)
    y = _synthesize_frames(spec, cfg)
    half = cfg.win // 2
    return Waveform(y[half : half + n_frames * cfg.hop], cfg.sample_rate_hz)


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def _ramp_integral(lo, hi, x0, x1):
    """Integral of the unit ramp (f - x0) / (x1 - x0) over [lo, hi] clipped to [x0, x1]."""
    lo = np.clip(lo, x0, x1)
    hi = np.clip(hi, x0, x1)
    return ((hi - x0) ** 2 - (lo - x0) ** 2) / (2.0 * (x1 - x0))


@functools.lru_cache(maxsize=8)
def mel_filterbank(cfg: SpectralConfig = SpectralConfig()) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft/2 + 1).

    Triangles are spaced uniformly on the HTK mel scale over [fmin, fmax].
    Each weight is the mean triangle height over the FFT bin's frequency
    interval (exact integral) rather than a point sample, so filters
    narrower than one bin keep positive area.
    """
    mel_pts = np.linspace(_hz_to_mel(cfg.fmin), _hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    f_pts = _mel_to_hz(mel_pts)
    lower = f_pts[:-2, None]
    center = f_pts[1:-1, None]
    upper = f_pts[2:, None]

    nyquist = cfg.sample_rate_hz / 2.0
    delta = cfg.sample_rate_hz / cfg.n_fft
    f_bins = np.arange(cfg.n_bins) * delta
    bin_lo = np.maximum(f_bins - delta / 2.0, 0.0)[None, :]
    bin_hi = np.minimum(f_bins + delta / 2.0, nyquist)[None, :]

    rise = _ramp_integral(bin_lo, bin_hi, lower, center)
    fall = _ramp_integral(-bin_hi, -bin_lo, -upper, -center)
    fb = (rise + fall) / (bin_hi - bin_lo)
    fb.flags.writeable = False
    return fb


@functools.lru_cache(maxsize=8)
def _filterbank_pinv(cfg: SpectralConfig) -> np.ndarray:
    inv = np.linalg.pinv(mel_filterbank(cfg))
    inv.flags.writeable = False
    return inv


def extract_mel(w: Waveform, cfg: SpectralConfig = SpectralConfig()) -> MelSpectrogram:
    """Log-mel spectrogram: log(max(filterbank @ |stft|, log_floor))."""
    mag = np.abs(stft(w, cfg))
    mel = mag @ mel_filterbank(cfg).T
    values = np.log(np.maximum(mel, cfg.log_floor))
    return MelSpectrogram(values, cfg.frame_rate_hz, cfg.log_floor)


def mel_to_linear(m: MelSpectrogram, cfg: SpectralConfig = SpectralConfig()) -> np.ndarray:
    """Approximate magnitude spectrogram via the filterbank pseudo-inverse.

    Negative least-squares artifacts are clamped to zero.
    """
    if m.n_mels != cfg.n_mels:
        raise ShapeMismatchError(f"mel has {m.n_mels} bands, config expects {cfg.n_mels}")
    mag = np.exp(m.values) @ _filterbank_pinv(cfg).T
    return np.maximum(mag, 0.0)


def save_mels(m: MelSpectrogram, path) -> None:
    """Write the binary MELS format (magic, frames, n_mels, rate, float32 data)."""
    import struct

    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<III", m.n_frames, m.n_mels, m.frame_rate_hz))
        f.write(m.values.astype("<f4").tobytes())


def load_mels(path, log_floor: float = 1e-5) -> MelSpectrogram:
    """Read a MELS file; entries below log(log_floor) are clamped up to it."""
    import struct

    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise ParseError(f"{path.name}: not a MELS file")
    n_frames, n_mels, rate = struct.unpack("<III", raw[4:16])
    expected = 16 + 4 * n_frames * n_mels
    if len(raw) < expected:
        raise ParseError(f"{path.name}: truncated MELS payload")
    values = np.frombuffer(raw[16:expected], dtype="<f4").astype(np.float64)
    values = values.reshape(n_frames, n_mels)
    values = np.maximum(values, math.log(log_floor))
    return MelSpectrogram(values, rate, log_floor)


def save_mel_csv(m: MelSpectrogram, path) -> None:
    """Inspection-friendly CSV, one frame per row, 6 significant digits."""
    with open(path, "w") as f:
        for row in m.values:
            f.write(",".join(f"{v:.6g}" for v in row))
            f.write("\n")
