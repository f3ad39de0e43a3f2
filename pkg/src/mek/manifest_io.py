"""Dataset manifests and the interchange file formats shared by every
tool: prediction matrices, label files, feature tables, and the model
set manifest (models.json).

All files are UTF-8 CSV/JSON with '\\n' newlines and '.' decimal points.
Class order is lexicographic over class names everywhere, so indices
stay consistent across independently produced files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import ModelPredictions, PredictionSet
from .errors import (
    ClassTooSmall,
    DuplicatePath,
    DuplicateSampleId,
    HeaderMismatch,
    LengthMismatch,
    ParseError,
    RowSumError,
    UnknownSplit,
)

SPLITS = ("train", "test")
ROW_SUM_TOLERANCE = 1e-3


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]

    @property
    def class_names(self) -> list[str]:
        return sorted({e.label for e in self.entries})

    def subset(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def label_index(self, entry: ManifestEntry) -> int:
        return self.class_names.index(entry.label)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a `path,label,split` CSV; class names derive from the sorted
    unique labels."""
    path = Path(path)
    entries = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty manifest", line=1) from None
        if [h.strip() for h in header] != ["path", "label", "split"]:
            raise ParseError(f"{path}: header must be 'path,label,split'", line=1)
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}: expected 3 fields, got {len(row)}", line=reader.line_num)
            p, label, split = (field.strip() for field in row)
            if not p or not label:
                raise ParseError(f"{path}: empty path or label", line=reader.line_num)
            if split not in SPLITS:
                raise UnknownSplit(f"{path} line {reader.line_num}: split {split!r}")
            if p in seen:
                raise DuplicatePath(f"{path} line {reader.line_num}: duplicate path {p!r}")
            seen.add(p)
            entries.append(ManifestEntry(path=p, label=label, split=split))
    if not entries:
        raise ParseError(f"{path}: manifest has no entries", line=1)
    return DatasetManifest(entries=entries)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("path,label,split\n")
        for e in manifest.entries:
            fh.write(f"{e.path},{e.label},{e.split}\n")


def split_manifest(manifest: DatasetManifest, train_fraction: float, seed: int) -> DatasetManifest:
    """Stratified reshuffle: per class, floor(fraction * size) samples go
    to train and the rest to test; deterministic for a fixed seed."""
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    split_by_index: dict[int, str] = {}
    by_label: dict[str, list[int]] = {}
    for i, entry in enumerate(manifest.entries):
        by_label.setdefault(entry.label, []).append(i)
    for label in sorted(by_label):
        indices = np.array(by_label[label])
        if len(indices) < 2:
            raise ClassTooSmall(f"class {label!r} has {len(indices)} sample(s)")
        order = rng.permutation(len(indices))
        n_train = int(train_fraction * len(indices))
        for j, idx in enumerate(indices[order]):
            split_by_index[int(idx)] = "train" if j < n_train else "test"
    entries = [
        ManifestEntry(path=e.path, label=e.label, split=split_by_index[i])
        for i, e in enumerate(manifest.entries)
    ]
    return DatasetManifest(entries=entries)


# --------------------------------------------------------------------------
# prediction interchange files
# --------------------------------------------------------------------------

def read_predictions(
    path: str | Path,
    expected_classes: list[str] | None = None,
) -> ModelPredictions:
    """Load one model's probability matrix.

    Rows whose sum is within 1e-3 of one are renormalized; anything
    further off is a hard error. The largest pre-normalization deviation
    is kept on the result as `row_sum_deviation`.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty predictions file", line=1) from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "sample_id":
            raise HeaderMismatch(f"{path}: header must be 'sample_id,<class names...>'")
        class_names = header[1:]
        if expected_classes is not None and class_names != list(expected_classes):
            raise HeaderMismatch(
                f"{path}: classes {class_names} != expected {list(expected_classes)}"
            )
        sample_ids: list[str] = []
        rows: list[list[float]] = []
        seen: set[str] = set()
        max_deviation = 0.0
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: expected {len(header)} fields, got {len(row)}",
                    line=reader.line_num,
                )
            sid = row[0].strip()
            if sid in seen:
                raise DuplicateSampleId(f"{path} line {reader.line_num}: duplicate id {sid!r}")
            seen.add(sid)
            try:
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}", line=reader.line_num) from None
            if not all(np.isfinite(values)):
                raise ParseError(f"{path}: non-finite probability", line=reader.line_num)
            if min(values) < -1e-9 or max(values) > 1.0 + 1e-9:
                raise ParseError(
                    f"{path}: probabilities must lie in [0, 1]", line=reader.line_num
                )
            total = sum(values)
            deviation = abs(total - 1.0)
            if deviation > ROW_SUM_TOLERANCE:
                raise RowSumError(
                    f"{path}: row sums to {total:.6f}, outside 1 +- {ROW_SUM_TOLERANCE}",
                    line=reader.line_num,
                )
            max_deviation = max(max_deviation, deviation)
            sample_ids.append(sid)
            rows.append([v / total for v in values])
    probs = np.array(rows, dtype=np.float64).reshape(len(rows), len(class_names))
    return ModelPredictions(
        name=path.stem,
        probs=probs,
        sample_ids=sample_ids,
        class_names=class_names,
        row_sum_deviation=max_deviation,
    )


def write_predictions(
    path: str | Path,
    sample_ids: list[str],
    probs: np.ndarray,
    class_names: list[str],
) -> None:
    """Write a probability matrix with 9 significant digits per value so
    a read-back round trip recovers it to within 1e-9."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (len(sample_ids), len(class_names)):
        raise LengthMismatch(
            f"probs shape {probs.shape} != ({len(sample_ids)}, {len(class_names)})"
        )
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("sample_id," + ",".join(class_names) + "\n")
        for sid, row in zip(sample_ids, probs):
            fh.write(sid + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


# --------------------------------------------------------------------------
# labels and features
# --------------------------------------------------------------------------

def read_labels(path: str | Path) -> tuple[list[str], list[str]]:
    """Read a `sample_id,label` file; returns (sample_ids, label names)."""
    path = Path(path)
    sample_ids: list[str] = []
    labels: list[str] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty labels file", line=1) from None
        if [h.strip() for h in header] != ["sample_id", "label"]:
            raise HeaderMismatch(f"{path}: header must be 'sample_id,label'")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: expected 2 fields, got {len(row)}", line=reader.line_num)
            sid, label = row[0].strip(), row[1].strip()
            if sid in seen:
                raise DuplicateSampleId(f"{path} line {reader.line_num}: duplicate id {sid!r}")
            seen.add(sid)
            sample_ids.append(sid)
            labels.append(label)
    return sample_ids, labels


def write_labels(path: str | Path, sample_ids: list[str], labels: list[str]) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("sample_id,label\n")
        for sid, label in zip(sample_ids, labels):
            fh.write(f"{sid},{label}\n")


def labels_to_indices(labels: list[str], class_names: list[str]) -> np.ndarray:
    index = {name: i for i, name in enumerate(class_names)}
    out = np.empty(len(labels), dtype=np.int64)
    for i, label in enumerate(labels):
        if label not in index:
            raise ParseError(f"unknown class {label!r}, expected one of {class_names}")
        out[i] = index[label]
    return out


def read_features_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a `sample_id,f0,...` feature table; returns (ids, matrix)."""
    path = Path(path)
    sample_ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty features file", line=1) from None
        if len(header) < 2 or header[0].strip() != "sample_id":
            raise HeaderMismatch(f"{path}: header must be 'sample_id,f0,...'")
        dim = len(header) - 1
        seen: set[str] = set()
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != dim + 1:
                raise ParseError(
                    f"{path}: expected {dim + 1} fields, got {len(row)}", line=reader.line_num
                )
            sid = row[0].strip()
            if sid in seen:
                raise DuplicateSampleId(f"{path} line {reader.line_num}: duplicate id {sid!r}")
            seen.add(sid)
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}", line=reader.line_num) from None
            sample_ids.append(sid)
    return sample_ids, np.array(rows, dtype=np.float64).reshape(len(rows), dim)


def write_features_csv(path: str | Path, sample_ids: list[str], features: np.ndarray) -> None:
    features = np.asarray(features, dtype=np.float64)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("sample_id," + ",".join(f"f{i}" for i in range(features.shape[1])) + "\n")
        for sid, row in zip(sample_ids, features):
            fh.write(sid + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


# --------------------------------------------------------------------------
# model set manifest
# --------------------------------------------------------------------------

def write_models_manifest(path: str | Path, entries: list[dict]) -> None:
    """entries: [{name, prediction_file, accuracy?}] in w_i order."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(entries, fh, indent=2)
        fh.write("\n")


def load_model_set(path: str | Path, expected_classes: list[str] | None = None) -> PredictionSet:
    """Load models.json and every prediction file it references; list
    order defines the weight indices."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{path}: expected a non-empty JSON list of models")
    models: list[ModelPredictions] = []
    sample_ids: list[str] | None = None
    class_names: list[str] | None = list(expected_classes) if expected_classes else None
    for item in raw:
        if not isinstance(item, dict) or "name" not in item or "prediction_file" not in item:
            raise ParseError(f"{path}: each entry needs 'name' and 'prediction_file'")
        pred_path = Path(item["prediction_file"])
        if not pred_path.is_absolute():
            pred_path = path.parent / pred_path
        preds = read_predictions(pred_path, expected_classes=class_names)
        preds.name = item["name"]
        preds.accuracy = item.get("accuracy")
        if class_names is None:
            class_names = preds.class_names
        if sample_ids is None:
            sample_ids = preds.sample_ids
        elif preds.sample_ids != sample_ids:
            raise LengthMismatch(
                f"{pred_path}: sample ids or order differ from the first model"
            )
        models.append(preds)
    return PredictionSet(models=models, sample_ids=sample_ids, class_names=class_names)
