"""Command-line entry point.

Subcommands cover the full workflow: preprocess images, extract HOG
features, train/predict with the classical models, vote or search
weights over prediction files, evaluate, or run the whole classical
pipeline from a manifest. Progress goes to stderr; results go to output
files (and stdout only where a flag asks for it), so stages compose.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classifiers, ensemble, evaluation, features, imageproc, manifest_io
from .errors import MekError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("MEK_THREADS")
        value = int(env) if env else (os.cpu_count() or 1)
    return max(1, value)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _iter_images(root: Path) -> list[Path]:
    paths = [p for p in root.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(paths)


# --------------------------------------------------------------------------
# preprocess
# --------------------------------------------------------------------------

def cmd_preprocess(args) -> int:
    in_root = Path(args.input)
    out_root = Path(args.output)
    if not in_root.is_dir():
        raise MekError(f"input directory not found: {in_root}")
    paths = _iter_images(in_root)
    if not paths:
        raise MekError(f"no PNG/JPEG images under {in_root}")
    canny_params = imageproc.CannyParams(
        gaussian_sigma=args.sigma,
        low_threshold_ratio=args.low,
        high_threshold_ratio=args.high,
    )
    targets = imageproc.BcetTargets(args.min, args.max, args.mean)

    def process(path: Path) -> Path:
        img = imageproc.read_gray(path)
        out_path = (out_root / path.relative_to(in_root)).with_suffix(".png")
        out_path.parent.mkdir(parents=True, exist_ok=True)
        if args.mode == "bcet":
            result = imageproc.bcet(img, targets.target_min, targets.target_max, targets.target_mean)
            imageproc.write_gray(out_path, result)
        else:
            edges = imageproc.edge_pipeline(
                img, k=args.k, canny_params=canny_params, bcet_targets=targets, seed=args.seed
            )
            imageproc.write_edges(out_path, edges)
        return out_path

    with ThreadPoolExecutor(max_workers=resolve_threads(args.threads)) as pool:
        for i, _ in enumerate(pool.map(process, paths), 1):
            if i % 200 == 0 or i == len(paths):
                _log(f"preprocess: {i}/{len(paths)}")
    return 0


# --------------------------------------------------------------------------
# extract
# --------------------------------------------------------------------------

def _extraction_inputs(args) -> tuple[list[str], list[Path]]:
    """Resolve (sample_ids, image paths) from a directory or a manifest."""
    source = Path(args.input)
    if source.is_dir():
        paths = _iter_images(source)
        if not paths:
            raise MekError(f"no PNG/JPEG images under {source}")
        return [p.relative_to(source).as_posix() for p in paths], paths
    manifest = manifest_io.load_manifest(source)
    entries = manifest.subset(args.split) if args.split else manifest.entries
    if not entries:
        raise MekError(f"manifest has no '{args.split}' entries")
    root = source.parent
    ids = [e.path for e in entries]
    paths = [Path(e.path) if Path(e.path).is_absolute() else root / e.path for e in entries]
    return ids, paths


def cmd_extract(args) -> int:
    params = features.HogParams(
        resize_to=args.resize,
        cell_size=args.cell,
        block_cells=args.block,
        block_stride=args.stride,
        bins=args.bins,
    )
    ids, paths = _extraction_inputs(args)

    def extract_one(path: Path) -> np.ndarray:
        img = imageproc.read_gray(path)
        if not args.raw_gray:
            img = imageproc.bcet(img, args.min, args.max, args.mean)
        return features.hog(img, params)

    with ThreadPoolExecutor(max_workers=resolve_threads(args.threads)) as pool:
        vectors = []
        for i, vec in enumerate(pool.map(extract_one, paths), 1):
            vectors.append(vec)
            if i % 200 == 0 or i == len(paths):
                _log(f"extract: {i}/{len(paths)}")
    manifest_io.write_features_csv(args.output, ids, np.stack(vectors))
    return 0


# --------------------------------------------------------------------------
# train / predict
# --------------------------------------------------------------------------

def _load_dataset(features_path: str, labels_path: str) -> classifiers.LabeledDataset:
    ids, matrix = manifest_io.read_features_csv(features_path)
    label_ids, label_names = manifest_io.read_labels(labels_path)
    by_id = dict(zip(label_ids, label_names))
    missing = [sid for sid in ids if sid not in by_id]
    if missing:
        raise MekError(f"{len(missing)} feature rows lack labels, first: {missing[0]!r}")
    class_names = sorted(set(label_names))
    labels = manifest_io.labels_to_indices([by_id[sid] for sid in ids], class_names)
    return classifiers.LabeledDataset(features=matrix, labels=labels, class_names=class_names)


def cmd_train(args) -> int:
    data = _load_dataset(args.features, args.labels)
    if args.model == "knn":
        metric = classifiers.DistanceMetric(args.metric, p=args.p)
        model = classifiers.knn_fit(data, k=args.k, metric=metric)
    else:
        kernel = classifiers.KernelSpec(
            args.kernel, gamma=args.gamma, degree=args.degree, coef0=args.coef0, sigma=args.sig
        )
        model = classifiers.svm_train(
            data, kernel, C=args.C, tol=args.tol, max_passes=args.max_passes, seed=args.seed
        )
    classifiers.save_model(model, args.out)
    _log(f"train: wrote {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = classifiers.load_model(args.model)
    ids, matrix = manifest_io.read_features_csv(args.features)
    if isinstance(model, classifiers.KnnModel):
        probs = classifiers.knn_predict_proba_all(model, matrix)
    else:
        probs = classifiers.svm_predict_proba_all(model, matrix)
    manifest_io.write_predictions(args.out, ids, probs, model.class_names)
    _log(f"predict: wrote {args.out}")
    return 0


# --------------------------------------------------------------------------
# vote / optimize / evaluate
# --------------------------------------------------------------------------

def _truth_for_set(pset: ensemble.PredictionSet, labels_path: str) -> np.ndarray:
    label_ids, label_names = manifest_io.read_labels(labels_path)
    by_id = dict(zip(label_ids, label_names))
    missing = [sid for sid in pset.sample_ids if sid not in by_id]
    if missing:
        raise MekError(f"{len(missing)} samples lack labels, first: {missing[0]!r}")
    return manifest_io.labels_to_indices(
        [by_id[sid] for sid in pset.sample_ids], pset.class_names
    )


def _parse_weights(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise MekError(f"weights must be comma-separated integers, got {text!r}") from None


def _scenario_payload(pset: ensemble.PredictionSet, result: ensemble.ScenarioResult) -> dict:
    payload = {
        "models": [m.name for m in pset.models],
        "weights": list(result.weights),
        "accuracy": result.accuracy,
    }
    payload.update(evaluation.report_to_dict(result.report))
    return payload


def cmd_vote(args) -> int:
    pset = manifest_io.load_model_set(args.models)
    truth = _truth_for_set(pset, args.labels)
    if args.weights:
        weights = _parse_weights(args.weights)
        scenario = "explicit"
    else:
        scenario = args.scenario
        if scenario == "uniform":
            weights = ensemble.scenario_uniform(pset.n_models)
        elif scenario == "incremental":
            weights = ensemble.scenario_incremental(pset)
        else:
            weights = ensemble.scenario_highest(pset)
    result = ensemble.vote_all(pset, weights, truth)
    payload = {"scenario": scenario, **_scenario_payload(pset, result)}
    Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _log(f"vote: accuracy {100.0 * result.accuracy:.2f}%, wrote {args.report}")
    return 0


def cmd_optimize(args) -> int:
    pset = manifest_io.load_model_set(args.models)
    truth = _truth_for_set(pset, args.labels)
    results = ensemble.optimize_weights(
        pset,
        truth,
        grid_max=args.grid_max,
        top_k=args.top,
        budget=args.budget,
        seed=args.seed,
    )
    payload = {
        "grid_max": args.grid_max,
        "budget": args.budget,
        "seed": args.seed,
        "results": [_scenario_payload(pset, r) for r in results],
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    best = results[0]
    _log(f"optimize: best accuracy {100.0 * best.accuracy:.2f}% at weights {list(best.weights)}")
    return 0


def cmd_evaluate(args) -> int:
    preds = manifest_io.read_predictions(args.predictions)
    label_ids, label_names = manifest_io.read_labels(args.labels)
    by_id = dict(zip(label_ids, label_names))
    missing = [sid for sid in preds.sample_ids if sid not in by_id]
    if missing:
        raise MekError(f"{len(missing)} samples lack labels, first: {missing[0]!r}")
    truth = manifest_io.labels_to_indices(
        [by_id[sid] for sid in preds.sample_ids], preds.class_names
    )
    predicted = preds.probs.argmax(axis=1)
    rep = evaluation.report(
        evaluation.confusion(truth, predicted, len(preds.class_names), preds.class_names)
    )
    Path(args.out).write_text(
        json.dumps(evaluation.report_to_dict(rep), indent=2) + "\n", encoding="utf-8"
    )
    if args.text:
        print(evaluation.format_report_text(rep))
    _log(f"evaluate: accuracy {100.0 * rep.accuracy:.2f}%, wrote {args.out}")
    return 0


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

def cmd_pipeline(args) -> int:
    """Manifest to report: features, classical models, vote, weight search."""
    manifest_path = Path(args.manifest)
    manifest = manifest_io.load_manifest(manifest_path)
    train_entries = manifest.subset("train")
    test_entries = manifest.subset("test")
    if not train_entries or not test_entries:
        raise MekError("pipeline needs both train and test entries in the manifest")
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    class_names = manifest.class_names
    root = manifest_path.parent
    params = features.HogParams(
        resize_to=args.resize,
        cell_size=args.cell,
        block_cells=args.block,
        block_stride=args.stride,
        bins=args.bins,
    )

    def extract_split(entries) -> tuple[list[str], np.ndarray, np.ndarray]:
        def one(entry) -> np.ndarray:
            path = Path(entry.path) if Path(entry.path).is_absolute() else root / entry.path
            img = imageproc.read_gray(path)
            if not args.raw_gray:
                img = imageproc.bcet(img)
            return features.hog(img, params)

        with ThreadPoolExecutor(max_workers=resolve_threads(args.threads)) as pool:
            matrix = np.stack(list(pool.map(one, entries)))
        ids = [e.path for e in entries]
        labels = manifest_io.labels_to_indices([e.label for e in entries], class_names)
        return ids, matrix, labels

    _log(f"pipeline: extracting features for {len(train_entries)} train images")
    _, train_x, train_y = extract_split(train_entries)
    _log(f"pipeline: extracting features for {len(test_entries)} test images")
    test_ids, test_x, test_y = extract_split(test_entries)
    train_ds = classifiers.LabeledDataset(train_x, train_y, class_names)

    manifest_io.write_labels(
        workdir / "labels.csv", test_ids, [e.label for e in test_entries]
    )

    model_entries = []
    knn_model = classifiers.knn_fit(
        train_ds, k=args.knn_k, metric=classifiers.DistanceMetric(args.knn_metric, p=args.p)
    )
    svm_model = classifiers.svm_train(
        train_ds,
        classifiers.KernelSpec(args.kernel, gamma=args.gamma),
        C=args.C,
        seed=args.seed,
    )
    for name, model, predict in (
        ("knn", knn_model, classifiers.knn_predict_proba_all),
        ("svm", svm_model, classifiers.svm_predict_proba_all),
    ):
        _log(f"pipeline: predicting with {name}")
        probs = predict(model, test_x)
        pred_path = workdir / f"{name}.csv"
        manifest_io.write_predictions(pred_path, test_ids, probs, class_names)
        accuracy = float(np.mean(probs.argmax(axis=1) == test_y))
        classifiers.save_model(model, workdir / f"{name}.bin")
        model_entries.append(
            {"name": name, "prediction_file": pred_path.name, "accuracy": accuracy}
        )
    for extra in args.extra_models or []:
        for entry in json.loads(Path(extra).read_text(encoding="utf-8")):
            entry = dict(entry)
            pred = Path(entry["prediction_file"])
            if not pred.is_absolute():
                entry["prediction_file"] = str((Path(extra).parent / pred).resolve())
            model_entries.append(entry)
    models_path = workdir / "models.json"
    manifest_io.write_models_manifest(models_path, model_entries)

    pset = manifest_io.load_model_set(models_path, expected_classes=class_names)
    truth = manifest_io.labels_to_indices([e.label for e in test_entries], class_names)
    summary = {"models": model_entries, "scenarios": {}}
    for scenario, weights in (
        ("uniform", ensemble.scenario_uniform(pset.n_models)),
        ("incremental", ensemble.scenario_incremental(pset)),
        ("highest", ensemble.scenario_highest(pset)),
    ):
        result = ensemble.vote_all(pset, weights, truth)
        summary["scenarios"][scenario] = _scenario_payload(pset, result)
        _log(f"pipeline: {scenario} vote accuracy {100.0 * result.accuracy:.2f}%")
    optimized = ensemble.optimize_weights(
        pset, truth, grid_max=args.grid_max, top_k=args.top, budget=args.budget, seed=args.seed
    )
    summary["optimized"] = [_scenario_payload(pset, r) for r in optimized]
    _log(
        f"pipeline: best searched accuracy {100.0 * optimized[0].accuracy:.2f}%"
        f" at weights {list(optimized[0].weights)}"
    )
    report_path = workdir / "report.json"
    report_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _log(f"pipeline: wrote {report_path}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mek", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="batch BCET or edge-detect a directory of images")
    p.add_argument("--mode", choices=("bcet", "edge"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int, default=4, help="K-means cluster count (edge mode)")
    p.add_argument("--sigma", type=float, default=1.4)
    p.add_argument("--low", type=float, default=0.05)
    p.add_argument("--high", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min", type=float, default=0.0, help="BCET target minimum")
    p.add_argument("--max", type=float, default=255.0, help="BCET target maximum")
    p.add_argument("--mean", type=float, default=110.0, help="BCET target mean")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="extract HOG features to a CSV table")
    p.add_argument("--input", required=True, help="image directory or dataset manifest")
    p.add_argument("--output", required=True)
    p.add_argument("--split", choices=("train", "test"), default=None,
                   help="restrict a manifest input to one split")
    p.add_argument("--resize", type=int, default=128)
    p.add_argument("--cell", type=int, default=8)
    p.add_argument("--block", type=int, default=2)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--bins", type=int, default=9)
    p.add_argument("--raw-gray", action="store_true",
                   help="skip the contrast-enhancement step before HOG")
    p.add_argument("--min", type=float, default=0.0)
    p.add_argument("--max", type=float, default=255.0)
    p.add_argument("--mean", type=float, default=110.0)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a KNN or SVM model on a feature table")
    p.add_argument("--model", choices=("knn", "svm"), required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--metric", choices=classifiers.METRIC_KINDS, default="euclidean")
    p.add_argument("--p", type=float, default=3.0, help="minkowski exponent")
    p.add_argument("--kernel", choices=classifiers.KERNEL_KINDS, default="linear")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--sig", type=float, default=1.0, help="gaussian kernel sigma")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write per-class probabilities for a feature table")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("vote", help="weighted vote over a model set")
    p.add_argument("--models", required=True, help="models.json manifest")
    p.add_argument("--labels", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights", help="comma-separated integers, one per model")
    group.add_argument("--scenario", choices=("uniform", "incremental", "highest"))
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("optimize", help="search integer vote weights for best accuracy")
    p.add_argument("--models", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--grid-max", type=int, default=10)
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="score one prediction file against labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--text", action="store_true", help="also print an aligned table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="manifest to ensemble report in one run")
    p.add_argument("--manifest", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--resize", type=int, default=128)
    p.add_argument("--cell", type=int, default=8)
    p.add_argument("--block", type=int, default=2)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--bins", type=int, default=9)
    p.add_argument("--raw-gray", action="store_true")
    p.add_argument("--knn-k", type=int, default=3)
    p.add_argument("--knn-metric", choices=classifiers.METRIC_KINDS, default="euclidean")
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--kernel", choices=classifiers.KERNEL_KINDS, default="linear")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--grid-max", type=int, default=10)
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--extra-models", action="append", default=None,
                   help="merge entries from another models.json (repeatable)")
    p.set_defaults(func=cmd_pipeline)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (MekError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
