#!/usr/bin/env python3
"""Synthesize a small labeled demo corpus so the CLI can run end to end.

Each phonation-mode label gets its own fundamental frequency plus mild noise,
which makes the classes trivially separable from spectral features. Optionally
also packs a pseudo-embedding store (well-separated Gaussians per class) for
exercising the sweep command.

Usage:
    python scripts/make_demo_corpus.py --out demo [--clips-per-mode 8] [--with-store]
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from phonation.embed import LayerEmbeddingSet, ModelSpec, write_store

MODE_FREQS = {"breathy": 220.0, "neutral": 440.0, "flow": 880.0, "pressed": 1760.0}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--clips-per-mode", type=int, default=8)
    parser.add_argument("--duration", type=float, default=0.5, help="seconds per clip")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--with-store", action="store_true",
                        help="also write demo_store.v2me with pseudo-embeddings")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rate = 16000
    rng = np.random.default_rng(args.seed)
    n = int(args.duration * rate)
    t = np.arange(n) / rate

    rows = ["id,path,label,vowel,pitch"]
    clip_ids = []
    for label, freq in MODE_FREQS.items():
        for i in range(args.clips_per_mode):
            cid = f"{label}{i:02d}"
            detune = rng.uniform(-5, 5)
            x = np.sin(2 * np.pi * (freq + detune) * t)
            x += 0.3 * np.sin(2 * np.pi * 2 * (freq + detune) * t + rng.uniform(0, 6.28))
            x += 0.02 * rng.normal(size=n)
            x = 0.85 * x / np.max(np.abs(x))
            wavfile.write(str(out / f"{cid}.wav"), rate, x.astype(np.float32))
            rows.append(f"{cid},{cid}.wav,{label},A,C4")
            clip_ids.append((cid, label))
    (out / "manifest.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {len(clip_ids)} clips + manifest to {out}/")

    if args.with_store:
        dim, n_layers = 256, 3
        model = ModelSpec("demo-embeddings", n_layers, dim)
        Q, _ = np.linalg.qr(rng.normal(size=(dim, 4)))
        centers = {label: 8.0 * Q[:, k] for k, label in enumerate(MODE_FREQS)}
        sets = [
            LayerEmbeddingSet(cid, model,
                              (rng.normal(size=(n_layers + 1, 1, dim)) + centers[label]).astype(np.float32),
                              pooled=True)
            for cid, label in clip_ids
        ]
        write_store(sets, out / "demo_store.v2me")
        print(f"wrote pseudo-embedding store to {out}/demo_store.v2me")

    print("\nnext steps:")
    print(f"  phonation features --manifest {out}/manifest.csv --out {out}/run")
    print(f"  phonation evaluate --manifest {out}/manifest.csv --out {out}/run "
          f"--features spectrogram,mel,mfcc --classifier svm,xgb")
    if args.with_store:
        print(f"  phonation sweep --manifest {out}/manifest.csv --out {out}/run "
              f"--store {out}/demo_store.v2me --classifier svm")


if __name__ == "__main__":
    main()
