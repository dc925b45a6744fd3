#!/usr/bin/env python3
"""Scan a downloaded corpus directory for WAVs and write a manifest CSV.

The label is inferred from path substrings (breathy / modal / neutral / flow /
pressed); vowel and pitch are parsed from filename tokens where recognizable
and fall back to "NA" otherwise (they are metadata only and do not affect
evaluation). Files whose label cannot be inferred are listed and skipped.

Usage:
    python scripts/build_manifest.py --root /path/to/corpus --out manifest.csv
"""

import argparse
import csv
import re
import sys
from pathlib import Path

LABEL_TOKENS = [
    ("breathy", "breathy"),
    ("pressed", "pressed"),
    ("flow", "flow"),
    ("modal", "neutral"),
    ("neutral", "neutral"),
]
PITCH_RE = re.compile(r"^[a-g](?:is|es|#|b)?[0-9]$", re.IGNORECASE)
VOWEL_RE = re.compile(r"^(?:a|ae|e|i|o|oe|u|ue|y)$", re.IGNORECASE)


def infer_label(path: Path) -> str | None:
    text = str(path).lower()
    for token, label in LABEL_TOKENS:
        if token in text:
            return label
    return None


def infer_tokens(stem: str) -> tuple[str, str]:
    vowel, pitch = "NA", "NA"
    for token in re.split(r"[_\-\s.]+", stem):
        if pitch == "NA" and PITCH_RE.match(token):
            pitch = token.upper().replace("IS", "#")
        elif vowel == "NA" and VOWEL_RE.match(token):
            vowel = token.upper()
    return vowel, pitch


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", required=True, help="directory to scan recursively")
    parser.add_argument("--out", required=True, help="manifest CSV to write")
    args = parser.parse_args()

    root = Path(args.root)
    wavs = sorted(root.rglob("*.wav")) + sorted(root.rglob("*.WAV"))
    if not wavs:
        print(f"no WAV files under {root}", file=sys.stderr)
        return 1

    rows, skipped = [], []
    for wav in wavs:
        label = infer_label(wav.relative_to(root))
        if label is None:
            skipped.append(wav)
            continue
        vowel, pitch = infer_tokens(wav.stem)
        clip_id = re.sub(r"[^A-Za-z0-9_-]", "_", str(wav.relative_to(root).with_suffix("")))
        rows.append([clip_id, str(wav.resolve()), label, vowel, pitch])

    with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "path", "label", "vowel", "pitch"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if skipped:
        print(f"skipped {len(skipped)} files with no inferable label:", file=sys.stderr)
        for wav in skipped[:20]:
            print(f"  {wav}", file=sys.stderr)
        if len(skipped) > 20:
            print(f"  ... and {len(skipped) - 20} more", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
