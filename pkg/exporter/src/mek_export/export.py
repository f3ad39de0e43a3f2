"""Batch inference over a manifest's test split, emitting the prediction
interchange CSV and a models.json entry."""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import ExportError, ManifestError, RepresentationMismatch
from .manifest import Manifest, Sample, load_manifest
from .models import DEFAULT_REPRESENTATION, EDGE, load_model

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class ExportSpec:
    model_id: str
    weights: Path
    manifest: Path
    out_dir: Path
    representation: str | None = None  # None = the model's default mapping
    allow_mismatch: bool = False
    name: str | None = None  # models.json entry name, defaults to model_id
    split: str = "test"
    image_size: int = 224
    channels: int = 3
    batch_size: int = 32
    normalize_mean: float | None = None
    normalize_std: float | None = None
    preprocessed_root: Path | None = None  # ready-made edge images, if any
    preprocess_command: list[str] = field(default_factory=lambda: ["mek"])

    def resolved_representation(self) -> str:
        default = DEFAULT_REPRESENTATION[self.model_id]
        if self.representation is None or self.representation == default:
            return default
        if not self.allow_mismatch:
            raise RepresentationMismatch(
                f"{self.model_id} expects {default!r} input, got {self.representation!r}"
                " (pass allow_mismatch to override)"
            )
        return self.representation


def _read_gray(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.float32)
        if im.mode in ("I", "I;16", "F"):
            return np.asarray(im.convert("L"), dtype=np.float32)
        rgb = np.asarray(im.convert("RGB"), dtype=np.float32)
    return (rgb @ np.array(LUMA_WEIGHTS, dtype=np.float32)).astype(np.float32)


def _to_tensor(img: np.ndarray, spec: ExportSpec) -> torch.Tensor:
    if spec.image_size:
        pil = Image.fromarray(img, mode="F")
        img = np.asarray(
            pil.resize((spec.image_size, spec.image_size), Image.Resampling.BILINEAR),
            dtype=np.float32,
        )
    tensor = torch.from_numpy(img / 255.0)[None, :, :]
    if spec.channels == 3:
        tensor = tensor.expand(3, -1, -1).clone()
    if spec.normalize_mean is not None:
        tensor = (tensor - spec.normalize_mean) / (spec.normalize_std or 1.0)
    return tensor


def _edge_paths(spec: ExportSpec, manifest: Manifest, samples: list[Sample], tmp: Path) -> dict[str, Path]:
    """Map sample ids to edge images, producing them with the primary
    CLI when no preprocessed directory was supplied."""
    if spec.preprocessed_root is not None:
        root = Path(spec.preprocessed_root)
    else:
        for sample in samples:
            if Path(sample.sample_id).is_absolute():
                raise ManifestError(
                    "absolute manifest paths need --preprocessed-root for edge input"
                )
        executable = spec.preprocess_command[0]
        if shutil.which(executable) is None:
            raise ExportError(
                f"{executable!r} not on PATH; install the primary toolkit or pass"
                " --preprocessed-root with ready-made edge images"
            )
        root = tmp / "edges"
        command = [
            *spec.preprocess_command,
            "preprocess", "--mode", "edge",
            "--input", str(manifest.root),
            "--output", str(root),
        ]
        proc = subprocess.run(command, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExportError(f"edge preprocessing failed: {proc.stderr.strip()}")
    mapping = {}
    for sample in samples:
        rel = Path(sample.sample_id)
        candidate = (root / rel).with_suffix(".png")
        if not candidate.is_file():
            raise ExportError(f"no edge image for {sample.sample_id!r} under {root}")
        mapping[sample.sample_id] = candidate
    return mapping


def _format_row(sample_id: str, probs: np.ndarray) -> str:
    return sample_id + "," + ",".join(f"{v:.9g}" for v in probs)


def _update_models_json(path: Path, entry: dict) -> None:
    entries = []
    if path.is_file():
        try:
            entries = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ExportError(f"{path}: {exc}") from None
        entries = [e for e in entries if e.get("name") != entry["name"]]
    entries.append(entry)
    path.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")


def export_predictions(spec: ExportSpec) -> dict:
    """Run the model over the manifest split and write <name>.csv plus a
    models.json entry; returns the entry.

    Row probabilities are softmax outputs serialized at 9 significant
    digits; sample order follows the manifest split order exactly.
    Accuracy is measured against the manifest labels and omitted when
    the split is empty.
    """
    representation = spec.resolved_representation()
    manifest = load_manifest(spec.manifest)
    samples = manifest.split(spec.split)
    class_names = manifest.class_names
    name = spec.name or spec.model_id

    spec.out_dir.mkdir(parents=True, exist_ok=True)
    pred_path = spec.out_dir / f"{name}.csv"
    header = "sample_id," + ",".join(class_names)

    if not samples:
        pred_path.write_text(header + "\n", encoding="utf-8")
        entry = {"name": name, "prediction_file": pred_path.name}
        _update_models_json(spec.out_dir / "models.json", entry)
        return entry

    model = load_model(spec.model_id, spec.weights)
    with tempfile.TemporaryDirectory() as tmp:
        if representation == EDGE:
            paths = _edge_paths(spec, manifest, samples, Path(tmp))
        else:
            paths = {s.sample_id: s.path for s in samples}

        lines = [header]
        correct = 0
        with torch.no_grad():
            for start in range(0, len(samples), spec.batch_size):
                batch = samples[start : start + spec.batch_size]
                tensors = torch.stack(
                    [_to_tensor(_read_gray(paths[s.sample_id]), spec) for s in batch]
                )
                logits = model(tensors)
                if logits.ndim != 2 or logits.shape[1] != len(class_names):
                    raise ExportError(
                        f"model emits {tuple(logits.shape)} for {len(class_names)} classes"
                    )
                probs = torch.softmax(logits.double(), dim=1).cpu().numpy()
                for sample, row in zip(batch, probs):
                    lines.append(_format_row(sample.sample_id, row))
                    if class_names[int(row.argmax())] == sample.label:
                        correct += 1
                print(
                    f"export: {min(start + spec.batch_size, len(samples))}/{len(samples)}",
                    file=sys.stderr,
                )
    pred_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    entry = {
        "name": name,
        "prediction_file": pred_path.name,
        "accuracy": correct / len(samples),
    }
    _update_models_json(spec.out_dir / "models.json", entry)
    return entry
