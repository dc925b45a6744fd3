"""Command-line pipeline: feature extraction, evaluation, layer sweeps, reports.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
Every command is deterministic for a fixed seed and fixed inputs, including
the bytes of all output artifacts. The V2M_LOG environment variable sets the
log level (debug, info, warning; default warning).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import corpus, dsp, embed, evaluate, learn
from .plot import sweep_svg

log = logging.getLogger("phonation")


class UsageError(ValueError):
    pass


BASELINE_KINDS = {
    "spectrogram": dsp.FeatureKind.SPECTROGRAM,
    "mel": dsp.FeatureKind.MEL,
    "mfcc": dsp.FeatureKind.MFCC,
}
CLASSIFIERS = ("svm", "xgb", "oracle")


def _parse_kinds(spec: str) -> list[dsp.FeatureKind]:
    kinds = []
    for token in spec.split(","):
        token = token.strip().lower()
        if token not in BASELINE_KINDS:
            raise UsageError(f"unknown feature kind {token!r} (choose from {sorted(BASELINE_KINDS)})")
        kinds.append(BASELINE_KINDS[token])
    if not kinds:
        raise UsageError("no feature kinds given")
    return kinds


def _parse_classifiers(spec: str) -> list[str]:
    names = []
    for token in spec.split(","):
        token = token.strip().lower()
        if token not in CLASSIFIERS:
            raise UsageError(f"unknown classifier {token!r} (choose from {CLASSIFIERS})")
        names.append(token)
    if not names:
        raise UsageError("no classifier given")
    return names


def _load_grid_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _svm_grid(config: dict, dim: int, kernel: learn.Kernel) -> list[learn.SvmParams]:
    section = config.get("svm")
    if not section:
        return learn.default_svm_grid(dim, kernel)
    kernel = learn.Kernel(section.get("kernel", kernel.value))
    Cs = [float(c) for c in section.get("C", [1.0])]
    if kernel is learn.Kernel.LINEAR:
        return [learn.SvmParams(kernel=kernel, C=c) for c in Cs]
    gammas = [1.0 / dim if g == "auto" else float(g) for g in section.get("gamma", ["auto"])]
    return [learn.SvmParams(kernel=kernel, C=c, gamma=g) for c in Cs for g in gammas]


def _gbdt_grid(config: dict, seed: int) -> list[learn.GbdtParams]:
    section = config.get("xgb")
    if not section:
        return learn.default_gbdt_grid(seed)
    return [
        learn.GbdtParams(
            n_rounds=r, learning_rate=lr, max_depth=d,
            min_samples_leaf=int(section.get("min_samples_leaf", 1)),
            l2_leaf_reg=float(section.get("l2_leaf_reg", 1.0)),
            subsample=float(section.get("subsample", 1.0)), seed=seed)
        for r in section.get("n_rounds", [100])
        for lr in section.get("learning_rate", [0.1])
        for d in section.get("max_depth", [3])
    ]


class _OracleLearner:
    """Self-test hook: looks the true label up by feature row, ignoring training."""

    name = "oracle"
    chosen_params: dict = {}

    def __init__(self, table: dict):
        self.table = table

    def fit(self, X, y, seed):
        return self

    def predict(self, X):
        return [self.table[np.ascontiguousarray(row).tobytes()] for row in X]


def _oracle_table(features: dict, labels: dict) -> dict:
    return {features[cid].values.tobytes(): labels[cid] for cid in labels}


def _make_learner(name: str, dim: int, config: dict, kernel: learn.Kernel, inner_k: int,
                  oracle_table: dict | None = None):
    if name == "svm":
        return learn.GridSearchLearner("svm", _svm_grid(config, dim, kernel), inner_k=inner_k)
    if name == "xgb":
        return learn.GridSearchLearner("xgb", _gbdt_grid(config, seed=0), inner_k=inner_k)
    return _OracleLearner(oracle_table or {})


def _ingest_all(metas: list[corpus.ClipMeta], jobs: int) -> tuple[dict, list[str]]:
    """Ingest every clip; returns (clips by id, error strings)."""
    def work(meta):
        try:
            return meta.id, corpus.ingest_clip(meta), None
        except Exception as exc:
            return meta.id, None, f"{meta.id}: {exc}"

    clips, errors = {}, []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for cid, clip, err in pool.map(work, metas):
            if err:
                errors.append(err)
            else:
                clips[cid] = clip
    return clips, errors


def _extract_kind(clips: dict, kind: dsp.FeatureKind, jobs: int) -> dict:
    ids = sorted(clips)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        vecs = list(pool.map(lambda cid: dsp.baseline_feature(clips[cid], kind), ids))
    return dict(zip(ids, vecs))


def _write_feature_csv(features: dict, kind: dsp.FeatureKind, path: Path) -> None:
    ids = sorted(features)
    dim = features[ids[0]].dim
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "kind", "layer"] + [f"v{i}" for i in range(dim)])
        for cid in ids:
            writer.writerow([cid, kind.value, ""] + [repr(float(v)) for v in features[cid].values])


def _sanitize(name: str) -> str:
    return name.replace(":", "_").replace("/", "_")


def cmd_features(args) -> int:
    kinds = _parse_kinds(args.features)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metas = corpus.load_manifest(args.manifest)
    clips, errors = _ingest_all(metas, args.jobs)
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    for kind in kinds:
        features = _extract_kind(clips, kind, args.jobs)
        _write_feature_csv(features, kind, out / f"features_{kind.value}.csv")
        embed.pooled_store_from_vectors(
            {cid: fv.values for cid, fv in features.items()}, kind.value,
            out / f"features_{kind.value}.v2me")
        dim = next(iter(features.values())).dim
        print(f"{kind.value}: {len(features)} clips, dim {dim}")
    return 0


def _parse_store_arg(arg: str) -> tuple[Path, int]:
    path, layer = arg, 0
    if ":" in arg and arg.rsplit(":", 1)[1].isdigit():
        path, layer_s = arg.rsplit(":", 1)
        layer = int(layer_s)
    return Path(path), layer


def _store_features(path: Path, layer: int, labels: dict) -> dict:
    reader = embed.open_store(path)
    missing = [cid for cid in sorted(labels) if cid not in reader]
    if missing:
        raise UsageError(f"store {path} lacks features for clips: {missing}")
    return {cid: embed.mean_pool(reader.read(cid), layer) for cid in sorted(labels)}


def _evaluate_pairs(tasks, jobs: int):
    """Run (label, callable) tasks, preserving order; threads when jobs > 1."""
    if jobs <= 1:
        return [fn() for _, fn in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn) for _, fn in tasks]
        return [f.result() for f in futures]


def cmd_evaluate(args) -> int:
    classifiers = _parse_classifiers(args.classifier)
    config = _load_grid_config(args.config)
    kernel = learn.Kernel(args.kernel)
    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)

    metas = corpus.load_manifest(args.manifest)
    labels = {m.id: m.label for m in metas}
    split = evaluate.stratified_folds(labels, k=args.k, seed=args.seed)

    feature_sets: list[tuple[str, dict]] = []
    if args.features:
        kinds = _parse_kinds(args.features)
        clips, errors = _ingest_all(metas, args.jobs)
        if errors:
            for err in errors:
                print(f"error: {err}", file=sys.stderr)
            return 1
        for kind in kinds:
            feature_sets.append((kind.value, _extract_kind(clips, kind, args.jobs)))
    for store_arg in args.store or []:
        path, layer = _parse_store_arg(store_arg)
        feats = _store_features(path, layer, labels)
        feature_sets.append((f"{feats[next(iter(feats))].model_id}:layer{layer}", feats))
    if not feature_sets:
        raise UsageError("nothing to evaluate: pass --features and/or --store")

    tasks = []
    for label, feats in feature_sets:
        dim = feats[next(iter(feats))].dim
        for clf in classifiers:
            learner = _make_learner(clf, dim, config, kernel, args.k, _oracle_table(feats, labels))
            tasks.append(((label, clf),
                          lambda f=feats, l=learner: evaluate.cross_validate(f, labels, split, l)))
    reports = _evaluate_pairs(tasks, args.jobs)

    with open(out / "results_table.csv", "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "classifier", "mean", "std"])
        for ((label, clf), report) in zip((t[0] for t in tasks), reports):
            writer.writerow([label, clf, f"{100 * report.mean:.1f}", f"{100 * report.std:.1f}"])
    evaluate.write_reports_csv(reports, out / "reports.csv")
    for ((label, clf), report) in zip((t[0] for t in tasks), reports):
        stem = f"{_sanitize(label)}_{clf}"
        (out / "reports" / f"{stem}.json").write_text(report.to_json() + "\n", encoding="utf-8")
        _write_confusion(report, out / f"confusion_{stem}.csv")
        print(f"{label} + {clf}: {100 * report.mean:.1f} ± {100 * report.std:.1f}")
    return 0


def _write_confusion(report: evaluate.EvalReport, path: Path) -> None:
    cm = report.confusion
    names = [evaluate._label_str(c) for c in cm.classes]
    norm = cm.row_normalized()
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true\\pred"] + names)
        for i, name in enumerate(names):
            writer.writerow([name] + [str(int(c)) for c in cm.counts[i]])
        writer.writerow(["normalized (%)"] + [""] * len(names))
        for i, name in enumerate(names):
            writer.writerow([name] + [f"{100 * v:.1f}" for v in norm[i]])


def cmd_sweep(args) -> int:
    if not args.store:
        raise UsageError("sweep needs at least one --store")
    classifiers = _parse_classifiers(args.classifier)
    config = _load_grid_config(args.config)
    kernel = learn.Kernel(args.kernel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    metas = corpus.load_manifest(args.manifest)
    labels = {m.id: m.label for m in metas}
    split = evaluate.stratified_folds(labels, k=args.k, seed=args.seed)

    for store_arg in args.store:
        path, _ = _parse_store_arg(store_arg)
        reader = embed.open_store(path)
        for clf in classifiers:
            table = None
            if clf == "oracle":
                table = {}
                for layer in range(reader.model.n_vectors):
                    for cid in sorted(labels):
                        table[embed.mean_pool(reader.read(cid), layer).values.tobytes()] = labels[cid]
            learner = _make_learner(clf, reader.model.hidden_dim, config, kernel, args.k, table)
            sweep = evaluate.layer_sweep(reader, labels, split, learner)
            stem = f"sweep_{_sanitize(sweep.model_id)}_{clf}"
            with open(out / f"{stem}.csv", "w", newline="\n", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["layer", "mean", "std"])
                writer.writerows(sweep.csv_rows())
            layers = [r.layer for r in sweep.reports]
            svg = sweep_svg(layers, [r.mean for r in sweep.reports],
                            [r.std for r in sweep.reports],
                            f"{sweep.model_id} + {clf}: accuracy by layer")
            (out / f"{stem}.svg").write_text(svg, encoding="utf-8")
            (out / f"{stem}.json").write_text(
                json.dumps([r.to_dict() for r in sweep.reports], sort_keys=True) + "\n",
                encoding="utf-8")
            best = sweep.reports[sweep.best_layer]
            print(f"{sweep.model_id} + {clf}: best layer {sweep.best_layer} "
                  f"(mean {100 * best.mean:.1f} ± {100 * best.std:.1f})")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    lines = []
    table = out / "results_table.csv"
    if table.exists():
        lines.append("feature x classifier accuracy (mean ± std, %):")
        with open(table, newline="", encoding="utf-8") as fh:
            for row in list(csv.reader(fh))[1:]:
                lines.append(f"  {row[0]:<28} {row[1]:<8} {row[2]} ± {row[3]}")
    for sweep_json in sorted(out.glob("sweep_*.json")):
        reports = json.loads(sweep_json.read_text(encoding="utf-8"))
        means = [r["mean"] for r in reports]
        best = int(np.argmax(means))
        lines.append(f"{sweep_json.stem}: best layer {best} (mean {100 * means[best]:.1f})")
    if not lines:
        raise UsageError(f"no evaluation artifacts found under {out}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    (out / "report.md").write_text("```\n" + text + "```\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonation",
        description="Phonation-mode classification pipeline for sustained-vowel recordings.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, features_default=None):
        p.add_argument("--manifest", required=True, help="manifest CSV (id,path,label,vowel,pitch)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--k", type=int, default=5, help="cross-validation folds")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("--config", default=None, help="TOML file overriding hyperparameter grids")
        p.add_argument("--kernel", choices=["linear", "rbf"], default="rbf")
        p.add_argument("--classifier", default="svm,xgb",
                       help="comma list from svm,xgb,oracle (oracle is a self-test hook)")
        p.add_argument("--features", default=features_default,
                       help="comma list from spectrogram,mel,mfcc")
        p.add_argument("--store", action="append", default=[],
                       help="embedding store, optionally PATH:LAYER (repeatable)")

    p_feat = sub.add_parser("features", help="extract baseline features to CSV + store")
    common(p_feat, features_default="spectrogram,mel,mfcc")
    p_feat.set_defaults(func=cmd_features)

    p_eval = sub.add_parser("evaluate", help="cross-validated accuracy table and confusion matrices")
    common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="per-layer accuracy sweep over an embedding store")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="summarize artifacts from a previous run")
    p_rep.add_argument("--out", required=True)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("V2M_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (corpus.ManifestError, embed.StoreError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        log.debug("failure detail", exc_info=True)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
