"""Support for the optional at-scale check against the public Kaggle
brain-MRI layout (root/Training/<class>/*, root/Testing/<class>/*)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from mek import classifiers as cl
from mek import features, imageproc
from mek.cli import IMAGE_SUFFIXES, resolve_threads


def load_split(root: Path, split: str, params: features.HogParams):
    split_dir = root / split
    paths = sorted(p for p in split_dir.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise FileNotFoundError(f"no images under {split_dir}")
    labels = [p.parent.name for p in paths]

    def extract(path: Path) -> np.ndarray:
        img = imageproc.bcet(imageproc.read_gray(path))
        return features.hog(img, params)

    with ThreadPoolExecutor(max_workers=resolve_threads(None)) as pool:
        matrix = np.stack(list(pool.map(extract, paths)))
    return matrix, labels


def run_kaggle_hog_knn(root: str | Path, k: int = 3) -> float:
    root = Path(root)
    params = features.HogParams(resize_to=128)
    train_x, train_labels = load_split(root, "Training", params)
    test_x, test_labels = load_split(root, "Testing", params)
    class_names = sorted(set(train_labels) | set(test_labels))
    train_y = np.array([class_names.index(l) for l in train_labels])
    test_y = np.array([class_names.index(l) for l in test_labels])
    data = cl.LabeledDataset(train_x, train_y, class_names)
    model = cl.knn_fit(data, k=k, metric=cl.DistanceMetric("euclidean"))
    probs = cl.knn_predict_proba_all(model, test_x)
    return float(np.mean(probs.argmax(axis=1) == test_y))
