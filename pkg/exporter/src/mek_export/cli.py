"""`mek-export`: run one pretrained backbone over a manifest and emit an
ensemble-compatible prediction file plus its models.json entry."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExportError
from .export import ExportSpec, export_predictions
from .models import GRAYSCALE, EDGE, known_models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mek-export", description=__doc__)
    parser.add_argument("--model", required=True, choices=known_models())
    parser.add_argument("--weights", required=True,
                        help="TorchScript archive (any model) or torchvision state dict")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--representation", choices=(GRAYSCALE, EDGE), default=None,
                        help="override the model's default input mapping")
    parser.add_argument("--allow-mismatch", action="store_true")
    parser.add_argument("--name", default=None, help="models.json entry name")
    parser.add_argument("--split", choices=("train", "test"), default="test")
    parser.add_argument("--image-size", type=int, default=224)
    parser.add_argument("--channels", type=int, choices=(1, 3), default=3)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--mean", type=float, default=None)
    parser.add_argument("--std", type=float, default=None)
    parser.add_argument("--preprocessed-root", default=None,
                        help="directory of ready-made edge images (skips the preprocess call)")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = ExportSpec(
        model_id=args.model,
        weights=Path(args.weights),
        manifest=Path(args.manifest),
        out_dir=Path(args.out),
        representation=args.representation,
        allow_mismatch=args.allow_mismatch,
        name=args.name,
        split=args.split,
        image_size=args.image_size,
        channels=args.channels,
        batch_size=args.batch_size,
        normalize_mean=args.mean,
        normalize_std=args.std,
        preprocessed_root=Path(args.preprocessed_root) if args.preprocessed_root else None,
    )
    try:
        entry = export_predictions(spec)
    except (ExportError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if "accuracy" in entry:
        print(f"export: {entry['name']} accuracy {100.0 * entry['accuracy']:.2f}%", file=sys.stderr)
    else:
        print(f"export: {entry['name']} (empty split, accuracy omitted)", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
