"""Reader for the shared `path,label,split` manifest format.

Implemented against the documented file contract (not the primary
package's code): paths resolve relative to the manifest, class names
are the sorted unique labels, split is 'train' or 'test'.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

SPLITS = ("train", "test")


@dataclass(frozen=True)
class Sample:
    sample_id: str  # the manifest path field, verbatim
    path: Path  # resolved location on disk
    label: str
    split: str


@dataclass
class Manifest:
    samples: list[Sample]
    root: Path

    @property
    def class_names(self) -> list[str]:
        return sorted({s.label for s in self.samples})

    def split(self, name: str) -> list[Sample]:
        return [s for s in self.samples if s.split == name]


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    samples: list[Sample] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if [h.strip() for h in header] != ["path", "label", "split"]:
            raise ManifestError(f"{path}: header must be 'path,label,split'")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ManifestError(f"{path} line {reader.line_num}: expected 3 fields")
            rel, label, split = (field.strip() for field in row)
            if split not in SPLITS:
                raise ManifestError(f"{path} line {reader.line_num}: bad split {split!r}")
            if rel in seen:
                raise ManifestError(f"{path} line {reader.line_num}: duplicate path {rel!r}")
            seen.add(rel)
            resolved = Path(rel) if Path(rel).is_absolute() else path.parent / rel
            samples.append(Sample(sample_id=rel, path=resolved, label=label, split=split))
    if not samples:
        raise ManifestError(f"{path}: manifest has no entries")
    return Manifest(samples=samples, root=path.parent)
