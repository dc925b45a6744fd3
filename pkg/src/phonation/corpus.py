"""Corpus ingestion: manifest parsing, WAV decoding, resampling, normalization.

Every clip that leaves this module is mono, 16 kHz (or the requested target
rate) and peak-normalized so that max |sample| == 1.0. Resampling uses a
polyphase windowed-sinc filter (Kaiser window, 64 taps per phase, cutoff at
0.9 x the target Nyquist) so feature values are reproducible across runs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile

TARGET_RATE = 16000


class ManifestError(ValueError):
    """Raised for malformed manifests (bad header, duplicate ids, bad labels)."""


class AudioError(ValueError):
    """Raised for unreadable, non-PCM or degenerate (all-zero) audio."""


class PhonationMode(str, Enum):
    BREATHY = "breathy"
    NEUTRAL = "neutral"
    FLOW = "flow"
    PRESSED = "pressed"


# Canonical reporting order (confusion matrices, report rows).
MODE_ORDER = (
    PhonationMode.BREATHY,
    PhonationMode.NEUTRAL,
    PhonationMode.FLOW,
    PhonationMode.PRESSED,
)

_MODE_ALIASES = {"modal": PhonationMode.NEUTRAL}


def parse_mode(token: str) -> PhonationMode:
    """Parse a phonation-mode label, case-insensitively. 'modal' maps to neutral."""
    key = token.strip().lower()
    if key in _MODE_ALIASES:
        return _MODE_ALIASES[key]
    try:
        return PhonationMode(key)
    except ValueError:
        raise ManifestError(f"unknown label token {token!r}") from None


@dataclass(frozen=True)
class ClipMeta:
    id: str
    path: Path
    label: PhonationMode
    vowel: str
    pitch: str


@dataclass(frozen=True)
class AudioClip:
    meta: ClipMeta
    sample_rate: int
    samples: np.ndarray  # float64, peak-normalized to +-1.0


MANIFEST_COLUMNS = ("id", "path", "label", "vowel", "pitch")


def load_manifest(path: str | Path) -> list[ClipMeta]:
    """Read a manifest CSV (header ``id,path,label,vowel,pitch``) into ClipMetas.

    Relative audio paths are resolved against the manifest's directory.
    Raises ManifestError on duplicate ids, unknown labels, missing columns
    or missing audio files, naming the offending row.
    """
    path = Path(path)
    root = path.parent
    metas: list[ClipMeta] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in MANIFEST_COLUMNS if c not in header]
        if missing:
            raise ManifestError(f"manifest header missing column(s) {missing}")
        for rownum, row in enumerate(reader, start=2):
            if any(row.get(c) in (None, "") for c in MANIFEST_COLUMNS):
                raise ManifestError(f"row {rownum}: missing column value")
            clip_id = row["id"].strip()
            if clip_id in seen:
                raise ManifestError(f"duplicate id {clip_id}")
            seen.add(clip_id)
            try:
                label = parse_mode(row["label"])
            except ManifestError as exc:
                raise ManifestError(f"row {rownum}: {exc}") from None
            wav_path = Path(row["path"])
            if not wav_path.is_absolute():
                wav_path = root / wav_path
            if not wav_path.exists():
                raise ManifestError(f"row {rownum}: audio file not found: {wav_path}")
            metas.append(ClipMeta(clip_id, wav_path, label, row["vowel"].strip(), row["pitch"].strip()))
    return metas


def write_manifest(metas: list[ClipMeta], path: str | Path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for m in metas:
            writer.writerow([m.id, str(m.path), m.label.value, m.vowel, m.pitch])


def read_wav(path: str | Path) -> tuple[int, np.ndarray]:
    """Decode a RIFF PCM WAV (16/24-bit int or 32-bit float, mono or stereo).

    Returns (rate, float64 mono samples); stereo is averaged to mono.
    The absolute scale is arbitrary (normalization happens later).
    """
    try:
        rate, data = wavfile.read(str(path))
    except Exception as exc:
        raise AudioError(f"cannot decode WAV {path}: {exc}") from exc
    if data.size == 0:
        raise AudioError(f"empty WAV {path}")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data.mean(axis=1)
    elif data.ndim != 1:
        raise AudioError(f"unsupported channel layout in {path}")
    return int(rate), data


def design_resample_filter(up: int, down: int, taps_per_phase: int = 64, beta: float = 8.6) -> np.ndarray:
    """Kaiser-windowed sinc low-pass for polyphase resampling by up/down.

    Cutoff sits at 0.9 x the Nyquist of the lower of the two rates.
    """
    cutoff = 0.9 / max(up, down)  # fraction of the upsampled Nyquist
    numtaps = taps_per_phase * up + 1
    return signal.firwin(numtaps, cutoff, window=("kaiser", beta))


def resample(x: np.ndarray, src_rate: int, target_rate: int) -> np.ndarray:
    """Windowed-sinc polyphase resampling; identity when rates already match."""
    if src_rate == target_rate:
        return np.asarray(x, dtype=np.float64).copy()
    g = math.gcd(src_rate, target_rate)
    up, down = target_rate // g, src_rate // g
    h = design_resample_filter(up, down)
    return signal.resample_poly(np.asarray(x, dtype=np.float64), up, down, window=h)


def peak_normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    if peak == 0.0:
        raise AudioError("all-zero signal cannot be peak-normalized")
    return x / peak


def ingest_clip(meta: ClipMeta, target_rate: int = TARGET_RATE) -> AudioClip:
    """Load, downmix, resample to target_rate and peak-normalize one clip."""
    rate, data = read_wav(meta.path)
    if not np.any(data):
        raise AudioError(f"clip {meta.id}: all-zero signal")
    out = resample(data, rate, target_rate)
    out = peak_normalize(out)
    return AudioClip(meta=meta, sample_rate=target_rate, samples=out)


def synthetic_clip(samples: np.ndarray, clip_id: str = "synthetic",
                   label: PhonationMode = PhonationMode.NEUTRAL,
                   sample_rate: int = TARGET_RATE) -> AudioClip:
    """Wrap an in-memory waveform as an AudioClip (peak-normalized). Test/demo helper."""
    meta = ClipMeta(clip_id, Path(f"{clip_id}.wav"), label, "A", "C4")
    return AudioClip(meta=meta, sample_rate=sample_rate,
                     samples=peak_normalize(np.asarray(samples, dtype=np.float64)))


def relabel(clip: AudioClip, label: PhonationMode) -> AudioClip:
    return replace(clip, meta=replace(clip.meta, label=label))
