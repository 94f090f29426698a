#!/usr/bin/env python3
"""Generate a synthetic detection manifest plus its reference bundle.

The default taxonomy is the bundled nine-category tree with the two
annotators' published per-category object counts; --flat builds a flat
taxonomy instead (one top-level category per count).

Usage:
    python scripts/make_fixture.py --out-dir fixtures/
    python scripts/make_fixture.py --out-dir fixtures/ --flat 4,4,4 --feature-dim 8
"""

import argparse
from pathlib import Path

from vislabel.fixtures import make_fixture, nine_category_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True, type=Path)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--feature-dim", type=int, default=16)
    parser.add_argument(
        "--flat",
        default=None,
        help="Comma-separated object counts for a flat taxonomy, e.g. 4,4,4",
    )
    parser.add_argument(
        "--boxes-per-image", type=int, default=1, help="Pack several objects per image."
    )
    args = parser.parse_args()

    if args.flat:
        counts = [int(c) for c in args.flat.split(",")]
        paths = [str(i + 1) for i in range(len(counts))]
        fx = make_fixture(
            paths,
            counts,
            feature_dim=max(args.feature_dim, len(paths)),
            seed=args.seed,
            boxes_per_image=args.boxes_per_image,
        )
    else:
        fx = nine_category_fixture(feature_dim=args.feature_dim, seed=args.seed)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = args.out_dir / "manifest.jsonl"
    reference = args.out_dir / "reference.json"
    fx.write(manifest, reference)
    print(f"wrote {manifest} ({len(fx.ground_truth)} objects)")
    print(f"wrote {reference} ({len(fx.reference.nodes) - 1} categories)")


if __name__ == "__main__":
    main()
