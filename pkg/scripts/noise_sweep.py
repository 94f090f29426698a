#!/usr/bin/env python3
"""Sweep annotator noise and chart how inter-annotator agreement degrades.

For each flip probability, runs --trials independent two-annotator pairs on
the nine-category fixture and averages the alpha coefficient.

Usage:
    python scripts/noise_sweep.py
    python scripts/noise_sweep.py --levels 0,0.01,0.05,0.1 --trials 50
"""

import argparse
import json
import statistics

from vislabel.agreement import ReliabilityData, krippendorff_alpha_nominal
from vislabel.fixtures import nine_category_fixture
from vislabel.ingestion import explode, parse_manifest

from two_annotator_experiment import run_annotator


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--levels", default="0,0.01,0.05,0.1")
    parser.add_argument("--trials", type=int, default=25)
    parser.add_argument("--feature-dim", type=int, default=16)
    args = parser.parse_args()
    levels = [float(x) for x in args.levels.split(",")]

    fx = nine_category_fixture(feature_dim=args.feature_dim)
    lines = [json.dumps({"version": 1, "feature_dim": fx.feature_dim})]
    lines.extend(json.dumps(r) for r in fx.manifest_records)
    records, store = parse_manifest("\n".join(lines) + "\n")
    queue = explode(records)

    print(f"{'flip_p':>8}  {'mean alpha':>10}  {'min':>8}  {'max':>8}")
    for flip in levels:
        alphas = []
        for trial in range(args.trials):
            rows = {
                "a": run_annotator(fx, queue, store, flip, 1000 + 2 * trial)[0],
                "b": run_annotator(fx, queue, store, flip, 1001 + 2 * trial)[0],
            }
            alphas.append(krippendorff_alpha_nominal(ReliabilityData.from_rows(rows)).alpha)
            if flip == 0.0:
                break  # noise-free pairs are identical; one trial suffices
        print(
            f"{flip:>8}  {statistics.mean(alphas):>10.4f}  {min(alphas):>8.4f}  {max(alphas):>8.4f}"
        )


if __name__ == "__main__":
    main()
