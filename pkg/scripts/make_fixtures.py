#!/usr/bin/env python3
"""Generate a demo model set: seven synthetic prediction files whose
individual accuracies match the bundled reference figures, plus
models.json and labels.csv, ready for `mek vote` / `mek optimize`.

Usage: python scripts/make_fixtures.py [--out fixtures] [--samples 1311] [--seed 7]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from helpers import reference_fixture_set  # noqa: E402
from mek import manifest_io as mio  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures")
    parser.add_argument("--samples", type=int, default=1311)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pset, truth = reference_fixture_set(seed=args.seed, n_samples=args.samples)
    entries = []
    for model in pset.models:
        pred_path = out / f"{model.name}.csv"
        mio.write_predictions(pred_path, pset.sample_ids, model.probs, pset.class_names)
        entries.append(
            {"name": model.name, "prediction_file": pred_path.name, "accuracy": model.accuracy}
        )
        print(f"{model.name:<12} accuracy {100.0 * model.accuracy:.2f}%  -> {pred_path}")
    mio.write_models_manifest(out / "models.json", entries)
    mio.write_labels(
        out / "labels.csv", pset.sample_ids, [pset.class_names[t] for t in truth]
    )
    print(f"wrote {out / 'models.json'} and {out / 'labels.csv'}")
    print("try: mek vote --models", out / "models.json", "--labels", out / "labels.csv",
          "--scenario highest --report report.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
