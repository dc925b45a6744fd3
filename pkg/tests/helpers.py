"""Shared fixture helpers: WAV writing, synthetic clips and blob generators."""

import wave
from pathlib import Path

import numpy as np

from phonation import corpus
from phonation.corpus import ClipMeta, PhonationMode


def sine(freq: float, dur: float, rate: int, amp: float = 0.8) -> np.ndarray:
    t = np.arange(int(dur * rate)) / rate
    return amp * np.sin(2 * np.pi * freq * t)


def write_wav(path: Path, rate: int, data: np.ndarray, fmt: str = "float32") -> Path:
    """Write PCM WAV in one of the supported encodings: float32, int16, int24."""
    from scipy.io import wavfile

    data = np.asarray(data)
    if fmt == "float32":
        wavfile.write(str(path), rate, data.astype(np.float32))
    elif fmt == "int16":
        wavfile.write(str(path), rate, np.round(data * 32767).astype(np.int16))
    elif fmt == "int24":
        scaled = np.round(np.clip(data, -1, 1) * (2**23 - 1)).astype(np.int64)
        if scaled.ndim == 1:
            scaled = scaled[:, None]
        frames = b"".join(int(v & 0xFFFFFF).to_bytes(3, "little")
                          for row in scaled for v in row)
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(scaled.shape[1])
            wf.setsampwidth(3)
            wf.setframerate(rate)
            wf.writeframes(frames)
    else:
        raise ValueError(fmt)
    return path


def make_clip(samples: np.ndarray, clip_id: str = "clip",
              label: PhonationMode = PhonationMode.NEUTRAL, rate: int = 16000) -> corpus.AudioClip:
    """AudioClip wrapper without normalization, for DSP-level tests."""
    meta = ClipMeta(clip_id, Path(f"{clip_id}.wav"), label, "A", "C4")
    return corpus.AudioClip(meta=meta, sample_rate=rate, samples=np.asarray(samples, dtype=np.float64))


def write_manifest_rows(path: Path, rows: list[str]) -> Path:
    path.write_text("id,path,label,vowel,pitch\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def gaussian_blobs(n_per_class: int, n_classes: int, dim: int, sep: float, seed: int,
                   labels=None) -> tuple[np.ndarray, list]:
    """Isotropic unit-variance Gaussians with centers sep apart along distinct axes."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    names = labels or [f"class{k}" for k in range(n_classes)]
    for k in range(n_classes):
        center = np.zeros(dim)
        center[k % dim] = sep * (1 + k // dim)
        X.append(rng.normal(size=(n_per_class, dim)) + center)
        y += [names[k]] * n_per_class
    return np.vstack(X), y
