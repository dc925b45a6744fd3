"""Baseline spectro-temporal features for 16 kHz sustained-vowel clips.

Three per-clip vectors, all time-averaged over 25 ms Hamming frames with a
5 ms hop and a 1024-point FFT:

* log-magnitude spectrogram, 513-D (one-sided bins 0..512, log10, 1e-10 floor)
* log mel spectrogram, 80-D (HTK mel scale, triangular filters with peak 1,
  applied to the one-sided power spectrum)
* MFCC, 39-D (orthonormal DCT-II of the 80 log mel energies, coefficients
  0..12, plus delta and delta-delta blocks from a +-2 frame regression with
  edge replication)

No pre-emphasis, no dithering, no filter-area normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .corpus import AudioClip

LOG_FLOOR = 1e-10


class FeatureKind(str, Enum):
    SPECTROGRAM = "spectrogram"
    MEL = "mel"
    MFCC = "mfcc"
    EMBEDDING = "embedding"


@dataclass(frozen=True)
class StftConfig:
    frame_len: int = 400  # 25 ms at 16 kHz
    hop: int = 80         # 5 ms
    fft_size: int = 1024

    def __post_init__(self):
        if self.frame_len > self.fft_size:
            raise ValueError("frame_len must not exceed fft_size")
        if self.hop < 1:
            raise ValueError("hop must be >= 1")
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0

    def __post_init__(self):
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if not 0 <= self.fmin < self.fmax:
            raise ValueError("need 0 <= fmin < fmax")


@dataclass(frozen=True)
class MfccConfig:
    n_coeffs: int = 13
    delta_window: int = 2
    include_deltas: bool = True
    include_delta_deltas: bool = True

    def __post_init__(self):
        if self.delta_window < 1:
            raise ValueError("delta_window must be >= 1")


@dataclass(frozen=True)
class FeatureVector:
    kind: FeatureKind
    values: np.ndarray  # float64
    model_id: str | None = None
    layer: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def frame_count(n_samples: int, cfg: StftConfig) -> int:
    if n_samples < cfg.frame_len:
        raise ValueError(f"clip too short: {n_samples} samples < one {cfg.frame_len}-sample frame")
    return (n_samples - cfg.frame_len) // cfg.hop + 1


def frame_signal(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Cut x into windowed frames, shape (num_frames, frame_len)."""
    frame_count(len(x), cfg)
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.frame_len)[:: cfg.hop]
    return frames * np.hamming(cfg.frame_len)


def stft_magnitude(clip: AudioClip, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """One-sided magnitude spectrum per frame, shape (num_frames, fft_size/2 + 1)."""
    frames = frame_signal(clip.samples, cfg)
    return np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1))


def stft_log_magnitude(clip: AudioClip, cfg: StftConfig = StftConfig()) -> np.ndarray:
    return np.log10(np.maximum(stft_magnitude(clip, cfg), LOG_FLOOR))


def spectrogram_feature(clip: AudioClip, cfg: StftConfig = StftConfig()) -> FeatureVector:
    """Per-bin mean over time of the log-magnitude spectrum (513-D by default)."""
    return FeatureVector(FeatureKind.SPECTROGRAM, stft_log_magnitude(clip, cfg).mean(axis=0))


@lru_cache(maxsize=8)
def _filterbank_cached(mel: MelConfig, sample_rate: int, fft_size: int) -> np.ndarray:
    if mel.fmax > sample_rate / 2:
        raise ValueError("fmax exceeds Nyquist")
    pts = mel_to_hz(np.linspace(hz_to_mel(mel.fmin), hz_to_mel(mel.fmax), mel.n_mels + 2))
    centers = np.rint(pts * fft_size / sample_rate).astype(int)
    if np.any(np.diff(centers) < 1):
        raise ValueError("mel filter centers collide; reduce n_mels or widen the band")
    fb = np.zeros((mel.n_mels, fft_size // 2 + 1))
    for m in range(mel.n_mels):
        lo, mid, hi = centers[m], centers[m + 1], centers[m + 2]
        fb[m, lo : mid + 1] = (np.arange(lo, mid + 1) - lo) / (mid - lo)
        fb[m, mid : hi + 1] = (hi - np.arange(mid, hi + 1)) / (hi - mid)
    return fb


def mel_filterbank(mel: MelConfig, sample_rate: int, fft_size: int) -> np.ndarray:
    """Triangular HTK-mel filterbank over FFT bins, each filter peaking at 1.

    Filter centers are the band edges rounded to the nearest FFT bin; each
    triangle rises and falls linearly in bin index and is zero at its
    neighbors' centers.
    """
    return _filterbank_cached(mel, sample_rate, fft_size).copy()


def _log_mel_frames(clip: AudioClip, stft: StftConfig, mel: MelConfig) -> np.ndarray:
    power = stft_magnitude(clip, stft) ** 2
    fb = _filterbank_cached(mel, clip.sample_rate, stft.fft_size)
    return np.log10(np.maximum(power @ fb.T, LOG_FLOOR))


def mel_feature(clip: AudioClip, stft: StftConfig = StftConfig(),
                mel: MelConfig = MelConfig()) -> FeatureVector:
    """Per-band mean over time of the log mel power spectrum (80-D by default)."""
    return FeatureVector(FeatureKind.MEL, _log_mel_frames(clip, stft, mel).mean(axis=0))


@lru_cache(maxsize=4)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, rows are basis vectors: M @ M.T == I."""
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * k * (2 * m + 1) / (2 * n)) * np.sqrt(2.0 / n)
    mat[0] /= np.sqrt(2.0)
    mat.setflags(write=False)
    return mat


def delta_regression(x: np.ndarray, window: int) -> np.ndarray:
    """Temporal regression slope over +-window frames with edge replication.

    x has shape (num_frames, dim); the denominator is 2 * sum(d^2, d=1..window).
    """
    padded = np.pad(x, ((window, window), (0, 0)), mode="edge")
    num = np.zeros_like(x)
    for d in range(1, window + 1):
        num += d * (padded[window + d : window + d + len(x)] - padded[window - d : window - d + len(x)])
    return num / (2.0 * sum(d * d for d in range(1, window + 1)))


def mfcc_frames(clip: AudioClip, stft: StftConfig = StftConfig(),
                mel: MelConfig = MelConfig(), mfcc: MfccConfig = MfccConfig()) -> np.ndarray:
    """Per-frame MFCC matrix with delta blocks appended, shape (num_frames, 39)."""
    if mfcc.n_coeffs > mel.n_mels:
        raise ValueError("n_coeffs must not exceed n_mels")
    logmel = _log_mel_frames(clip, stft, mel)
    need = 2 * mfcc.delta_window + 1
    if len(logmel) < need:
        raise ValueError(f"too few frames for delta regression: {len(logmel)} < {need}")
    cep = logmel @ dct_matrix(mel.n_mels)[: mfcc.n_coeffs].T
    blocks = [cep]
    if mfcc.include_deltas or mfcc.include_delta_deltas:
        d1 = delta_regression(cep, mfcc.delta_window)
        if mfcc.include_deltas:
            blocks.append(d1)
        if mfcc.include_delta_deltas:
            blocks.append(delta_regression(d1, mfcc.delta_window))
    return np.hstack(blocks)


def mfcc_feature(clip: AudioClip, stft: StftConfig = StftConfig(),
                 mel: MelConfig = MelConfig(), mfcc: MfccConfig = MfccConfig()) -> FeatureVector:
    """Mean over time of the per-frame MFCC + delta + delta-delta matrix (39-D)."""
    return FeatureVector(FeatureKind.MFCC, mfcc_frames(clip, stft, mel, mfcc).mean(axis=0))


BASELINE_DIMS = {FeatureKind.SPECTROGRAM: 513, FeatureKind.MEL: 80, FeatureKind.MFCC: 39}


def baseline_feature(clip: AudioClip, kind: FeatureKind,
                     stft: StftConfig = StftConfig(), mel: MelConfig = MelConfig(),
                     mfcc: MfccConfig = MfccConfig()) -> FeatureVector:
    if kind is FeatureKind.SPECTROGRAM:
        return spectrogram_feature(clip, stft)
    if kind is FeatureKind.MEL:
        return mel_feature(clip, stft, mel)
    if kind is FeatureKind.MFCC:
        return mfcc_feature(clip, stft, mel, mfcc)
    raise ValueError(f"not a baseline feature kind: {kind}")
