#!/usr/bin/env python3
"""HOG + KNN baseline on the public Kaggle brain-MRI dataset.

Expects the standard layout <root>/Training/<class>/* and
<root>/Testing/<class>/*. Extracts contrast-enhanced HOG descriptors at
128x128 and scores a k=3 euclidean KNN on the predefined test split.

Usage: python scripts/run_kaggle_knn.py --data-root /path/to/kaggle [--k 3]
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from mek import classifiers as cl
from mek import features, imageproc
from mek.cli import IMAGE_SUFFIXES, resolve_threads


def extract_split(root: Path, split: str, params: features.HogParams):
    paths = sorted(p for p in (root / split).rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise SystemExit(f"no images under {root / split}")
    labels = [p.parent.name for p in paths]

    def one(path: Path) -> np.ndarray:
        return features.hog(imageproc.bcet(imageproc.read_gray(path)), params)

    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=resolve_threads(None)) as pool:
        matrix = np.stack(list(pool.map(one, paths)))
    print(f"{split}: {len(paths)} images, {time.perf_counter() - start:.1f}s", file=sys.stderr)
    return matrix, labels


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-root", required=True)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--metric", choices=cl.METRIC_KINDS, default="euclidean")
    parser.add_argument("--resize", type=int, default=128)
    args = parser.parse_args()

    root = Path(args.data_root)
    params = features.HogParams(resize_to=args.resize)
    train_x, train_labels = extract_split(root, "Training", params)
    test_x, test_labels = extract_split(root, "Testing", params)
    class_names = sorted(set(train_labels) | set(test_labels))
    train_y = np.array([class_names.index(l) for l in train_labels])
    test_y = np.array([class_names.index(l) for l in test_labels])

    data = cl.LabeledDataset(train_x, train_y, class_names)
    model = cl.knn_fit(data, k=args.k, metric=cl.DistanceMetric(args.metric))
    start = time.perf_counter()
    probs = cl.knn_predict_proba_all(model, test_x)
    print(f"prediction: {time.perf_counter() - start:.1f}s", file=sys.stderr)
    accuracy = float(np.mean(probs.argmax(axis=1) == test_y))
    print(f"KNN k={args.k} {args.metric}: test accuracy {100.0 * accuracy:.2f}%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
