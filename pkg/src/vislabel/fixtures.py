"""Synthetic reference taxonomies, ground truths and manifests.

Used by the simulated-annotator harness, the experiment scripts and the
test suite. Feature vectors are linearly separable by construction: every
reference category gets its own basis direction plus a small seeded jitter,
so subtree centroids rank the true branch first.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .hierarchy import Hierarchy, LabelPath, create_hierarchy
from .ingestion import write_manifest

# The nine-category tree used by the bundled reliability experiment, with
# the per-category object counts of its two annotators.
NINE_CATEGORY_PATHS = (
    "1",
    "1_1",
    "1_1_1",
    "1_1_1_1",
    "1_1_1_2",
    "1_1_2",
    "1_1_3",
    "1_2",
    "1_3",
)
NINE_CATEGORY_COUNTS_A = (17, 42, 21, 21, 22, 13, 12, 33, 10)
NINE_CATEGORY_COUNTS_B = (17, 42, 20, 22, 22, 13, 12, 33, 10)


def build_reference(paths: tuple[str, ...] | list[str]) -> Hierarchy:
    """Build a hierarchy holding exactly the given ordinal paths.

    Each node gets a unique, human-readable descriptor triple. Paths must
    be ordinal-consistent: sorting by segments yields parents before
    children and siblings in ordinal order.
    """
    parsed = sorted(LabelPath.parse(p) for p in paths)
    h = create_hierarchy()
    by_path: dict[tuple[int, ...], int] = {(): h.root}
    for path in parsed:
        parent_key = path.segments[:-1]
        if parent_key not in by_path:
            raise ValueError(f"path {path} has no parent in the given set")
        label = str(path)
        cat = h.add_category(
            by_path[parent_key],
            genus=f"shared visual traits of group {label}",
            differentia=f"distinguishing marks of group {label}",
            name=f"cat-{label}",
        )
        if str(h.path_label(cat)) != label:
            raise ValueError(f"paths are not ordinal-consistent at {label}")
        by_path[path.segments] = cat
    return h


@dataclass(frozen=True)
class Fixture:
    reference: Hierarchy
    ground_truth: dict[str, str]  # object_id -> path
    manifest_records: list[dict]
    feature_dim: int

    def write(self, manifest_path: str | Path, reference_path: str | Path) -> None:
        write_manifest(manifest_path, self.feature_dim, self.manifest_records)
        write_reference_bundle(reference_path, self.reference, self.ground_truth)


def make_fixture(
    paths: tuple[str, ...] | list[str],
    counts: tuple[int, ...] | list[int],
    feature_dim: int | None = None,
    seed: int = 7,
    image_size: tuple[int, int] = (640, 480),
    boxes_per_image: int = 1,
) -> Fixture:
    """Synthetic objects distributed over the given category paths.

    Objects are emitted grouped by category, one feature per detector box,
    using one basis direction per category plus jitter scaled well below
    the separation margin.
    """
    if len(paths) != len(counts):
        raise ValueError("paths and counts must align")
    reference = build_reference(paths)
    dim = feature_dim if feature_dim is not None else max(len(paths), 4)
    if dim < len(paths):
        raise ValueError("feature_dim must be at least the number of categories")
    rng = random.Random(seed)
    width, height = image_size

    ground_truth: dict[str, str] = {}
    records: list[dict] = []
    pending_boxes: list[dict] = []
    image_no = 0

    def flush_image():
        nonlocal image_no, pending_boxes
        if not pending_boxes:
            return
        image_no += 1
        image_id = f"img{image_no:04d}"
        records.append(
            {
                "image_id": image_id,
                "uri": f"file:///data/images/{image_id}.jpg",
                "width": width,
                "height": height,
                "boxes": pending_boxes,
            }
        )
        for ordinal in range(1, len(pending_boxes) + 1):
            ground_truth[f"{image_id}#{ordinal}"] = pending_boxes[ordinal - 1].pop("_path")
        pending_boxes = []

    for path_index, (path, count) in enumerate(zip(paths, counts)):
        for _ in range(count):
            feature = [rng.uniform(-0.02, 0.02) for _ in range(dim)]
            feature[path_index] += 1.0
            w = rng.randint(40, 160)
            h = rng.randint(40, 160)
            x = rng.randint(0, width - w)
            y = rng.randint(0, height - h)
            pending_boxes.append(
                {
                    "x": x,
                    "y": y,
                    "w": w,
                    "h": h,
                    "score": round(rng.uniform(0.5, 1.0), 4),
                    "feature": [round(v, 6) for v in feature],
                    "_path": path,
                }
            )
            if len(pending_boxes) >= boxes_per_image:
                flush_image()
    flush_image()
    return Fixture(
        reference=reference,
        ground_truth=ground_truth,
        manifest_records=records,
        feature_dim=dim,
    )


def nine_category_fixture(feature_dim: int = 16, seed: int = 7) -> Fixture:
    return make_fixture(
        NINE_CATEGORY_PATHS, NINE_CATEGORY_COUNTS_A, feature_dim=feature_dim, seed=seed
    )


REFERENCE_VERSION = 1


def write_reference_bundle(
    path: str | Path, reference: Hierarchy, ground_truth: dict[str, str]
) -> None:
    data = {
        "version": REFERENCE_VERSION,
        "type": "reference",
        "hierarchy": reference.to_dict(),
        "ground_truth": dict(sorted(ground_truth.items())),
    }
    Path(path).write_text(
        json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_reference_bundle(path: str | Path) -> tuple[Hierarchy, dict[str, str]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("version") != REFERENCE_VERSION or data.get("type") != "reference":
        raise ValueError(f"{path}: not a reference bundle")
    return Hierarchy.from_dict(data["hierarchy"]), dict(data["ground_truth"])
