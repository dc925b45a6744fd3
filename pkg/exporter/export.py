#!/usr/bin/env python3
"""Dump layer-wise hidden states of pretrained speech models into .v2me stores.

One-shot companion tool for the phonation classification pipeline. For every
clip in a manifest it re-applies the ingestion contract (mono, 16 kHz via
Kaiser windowed-sinc resampling, peak normalization to +-1), runs a
wav2vec2/HuBERT checkpoint in inference mode and records the output of every
encoder layer plus the CNN feature-encoder output ("layer 0", taken after the
model's projection to hidden_dim so all blocks share one width).

The output is the binary store format consumed by the classifier package
(magic "V2ME", version 1); this script intentionally shares no code with it.
By default layers are pre-pooled to one frame by arithmetic time-averaging;
pass --frames to keep the full frame level. Checkpoint provenance is recorded
in a JSON sidecar next to the store (the fixed byte layout has no room for
free-form metadata).

Usage:
    export.py --manifest M --model {wav2vec2-base|wav2vec2-large|hubert-large}
              --out S.v2me [--frames] [--device cpu]
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile

TARGET_RATE = 16000
VALID_LABELS = {"breathy", "neutral", "modal", "flow", "pressed"}

# (kernel, stride) per conv layer of the wav2vec2/HuBERT feature encoder
CONV_LAYERS = ((10, 5), (3, 2), (3, 2), (3, 2), (3, 2), (2, 2), (2, 2))


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    checkpoint: str | None  # None for injected test instances
    n_layers: int
    hidden_dim: int
    normalize_input: bool  # zero-mean/unit-var per utterance before the model


MODELS = {
    # ASR-fine-tuned checkpoints; wav2vec2-base-960h was trained without
    # utterance normalization, the two large models expect it
    "wav2vec2-base": ModelEntry("wav2vec2-base", "facebook/wav2vec2-base-960h", 12, 768, False),
    "wav2vec2-large": ModelEntry("wav2vec2-large", "facebook/wav2vec2-large-960h", 24, 1024, True),
    "hubert-large": ModelEntry("hubert-large", "facebook/hubert-large-ls960-ft", 24, 1024, True),
}

_INJECTED: dict[str, object] = {}


def register_model(model_id: str, module, n_layers: int, hidden_dim: int,
                   normalize_input: bool = False) -> None:
    """Register an in-memory model instance (used by the tests)."""
    MODELS[model_id] = ModelEntry(model_id, None, n_layers, hidden_dim, normalize_input)
    _INJECTED[model_id] = module


def expected_frame_count(n_samples: int) -> int:
    """Output frames of the convolutional encoder for a given sample count."""
    n = n_samples
    for kernel, stride in CONV_LAYERS:
        n = (n - kernel) // stride + 1
    return max(n, 0)


# --- audio ingestion (same contract as the classifier's corpus module) -----

def read_manifest(path: Path) -> list[tuple[str, Path]]:
    clips: list[tuple[str, Path]] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in ("id", "path", "label"):
            if col not in (reader.fieldnames or []):
                raise ExportError(f"manifest missing column {col!r}")
        for row in reader:
            cid = row["id"].strip()
            if cid in seen:
                raise ExportError(f"duplicate id {cid}")
            seen.add(cid)
            if row["label"].strip().lower() not in VALID_LABELS:
                raise ExportError(f"unknown label {row['label']!r} for clip {cid}")
            wav = Path(row["path"])
            if not wav.is_absolute():
                wav = path.parent / wav
            clips.append((cid, wav))
    if not clips:
        raise ExportError("manifest has no rows")
    return clips


def ingest(path: Path) -> np.ndarray:
    rate, data = wavfile.read(str(path))
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if rate != TARGET_RATE:
        g = math.gcd(TARGET_RATE, int(rate))
        up, down = TARGET_RATE // g, rate // g
        h = signal.firwin(64 * up + 1, 0.9 / max(up, down), window=("kaiser", 8.6))
        data = signal.resample_poly(data, up, down, window=h)
    peak = np.max(np.abs(data))
    if peak == 0.0:
        raise ExportError(f"all-zero signal: {path}")
    return (data / peak).astype(np.float32)


# --- store writing (byte layout of the classifier's embed module) ----------

def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def write_store_file(path: Path, model_id: str, n_layers: int, hidden_dim: int,
                     pooled: bool, blocks: list[tuple[str, np.ndarray]]) -> None:
    header = bytearray()
    header += b"V2ME"
    header += struct.pack("<I", 1)
    header += _pack_str(model_id)
    header += struct.pack("<HHB", n_layers, hidden_dim, int(pooled))
    header += struct.pack("<I", len(blocks))
    entries = [_pack_str(cid) for cid, _ in blocks]
    offset = len(header) + sum(len(e) + 12 for e in entries)
    for (cid, arr), entry in zip(blocks, entries):
        header += entry
        header += struct.pack("<QI", offset, arr.shape[1])
        offset += arr.nbytes
    with open(path, "wb") as fh:
        fh.write(header)
        for _, arr in blocks:
            fh.write(arr.astype("<f4", copy=False).tobytes())


# --- export -----------------------------------------------------------------

def load_model(entry: ModelEntry, device: str):
    if entry.model_id in _INJECTED:
        model = _INJECTED[entry.model_id]
    else:
        from transformers import AutoModel

        try:
            model = AutoModel.from_pretrained(entry.checkpoint)
        except Exception as exc:
            raise ExportError(f"checkpoint {entry.checkpoint!r} unavailable: {exc}") from exc
    return model.to(device).eval()


def hidden_state_stack(model, wave: np.ndarray, device: str) -> np.ndarray:
    """Run one waveform; returns (n_layers + 1, frames, hidden_dim) float32."""
    import torch

    with torch.no_grad():
        out = model(torch.from_numpy(wave)[None].to(device), output_hidden_states=True)
    return torch.stack(out.hidden_states)[:, 0].cpu().numpy().astype(np.float32)


def export(manifest: Path, model_id: str, out: Path, pooled: bool = True,
           device: str = "cpu", progress=lambda msg: None) -> int:
    if model_id not in MODELS:
        raise ExportError(f"unknown model {model_id!r} (choose from {sorted(MODELS)})")
    entry = MODELS[model_id]
    clips = read_manifest(manifest)
    model = load_model(entry, device)

    blocks: list[tuple[str, np.ndarray]] = []
    for i, (cid, wav_path) in enumerate(clips):
        wave = ingest(wav_path)
        if expected_frame_count(len(wave)) < 1:
            raise ExportError(f"clip {cid} is shorter than one model frame "
                              f"({len(wave)} samples)")
        if entry.normalize_input:
            wave = ((wave - wave.mean()) / np.sqrt(wave.var() + 1e-7)).astype(np.float32)
        arr = hidden_state_stack(model, wave, device)
        if arr.shape[1] < 1:
            raise ExportError(f"clip {cid} is shorter than one model frame")
        if arr.shape[0] != entry.n_layers + 1 or arr.shape[2] != entry.hidden_dim:
            raise ExportError(
                f"model output {arr.shape} contradicts registry "
                f"({entry.n_layers + 1} layers x {entry.hidden_dim} dims) for {model_id}")
        if pooled:
            arr = arr.mean(axis=1, keepdims=True, dtype=np.float64).astype(np.float32)
        blocks.append((cid, arr))
        progress(f"[{i + 1}/{len(clips)}] {cid}: {arr.shape[1]} frames")

    write_store_file(out, entry.model_id, entry.n_layers, entry.hidden_dim, pooled, blocks)
    sidecar = {
        "model_id": entry.model_id,
        "checkpoint": entry.checkpoint,
        "n_layers": entry.n_layers,
        "hidden_dim": entry.hidden_dim,
        "pooled": pooled,
        "clip_count": len(blocks),
    }
    Path(f"{out}.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    return len(blocks)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--manifest", required=True, type=Path)
    parser.add_argument("--model", required=True, choices=sorted(MODELS))
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--frames", action="store_true",
                        help="keep frame-level matrices instead of pre-pooling")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)
    try:
        n = export(args.manifest, args.model, args.out, pooled=not args.frames,
                   device=args.device, progress=lambda m: print(m, file=sys.stderr))
    except (ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {n} clips to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
