"""Manifest loading and object-queue construction.

The detector lives outside this package: a manifest (JSON Lines) carries,
per image, the detected boxes and one precomputed feature vector per box.
Loading validates geometry and features, crops each box to a square, and
explodes images into an ordered queue of single-object instances. Queue
order is labeling order and is fully determined by the manifest bytes.

Manifest format: first line ``{"version": 1, "feature_dim": D}``, then one
object per line: ``{"image_id", "uri", "width", "height", "boxes": [{"x",
"y", "w", "h", "score", "feature": [..]}]}``. UTF-8, LF.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .similarity import DimensionMismatch, FeatureStore, FeatureVector, ZeroNorm

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1


class ManifestError(Exception):
    pass


class ParseError(ManifestError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"manifest line {line}: {reason}")
        self.line = line


class DuplicateId(ManifestError):
    pass


class DegenerateBox(ManifestError):
    pass


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned detector box; must overlap its image. Carries the
    externally computed feature for the object it bounds."""

    x: int
    y: int
    w: int
    h: int
    score: float
    feature: FeatureVector


@dataclass(frozen=True)
class CropRect:
    """Square crop in image coordinates."""

    x: int
    y: int
    side: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.side, self.side)


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    uri: str
    width: int
    height: int
    boxes: tuple[BoundingBox, ...]


@dataclass(frozen=True)
class ObjectInstance:
    """A localized single-object crop plus its feature vector."""

    object_id: str
    source: str
    crop: CropRect
    feature: FeatureVector


def object_id_for(image_id: str, ordinal: int) -> str:
    return f"{image_id}#{ordinal}"


def square_crop(box: BoundingBox, img_w: int, img_h: int) -> CropRect:
    """Smallest square containing the box, centered on it, shifted
    (never shrunk) to stay inside the image; only when no square of that
    side fits is the side clamped to min(img_w, img_h)."""
    if box.w <= 0 or box.h <= 0:
        raise DegenerateBox(f"box {box.w}x{box.h} has no area")
    if box.x + box.w <= 0 or box.y + box.h <= 0 or box.x >= img_w or box.y >= img_h:
        raise DegenerateBox("box does not intersect the image")
    side = min(max(box.w, box.h), img_w, img_h)
    x = box.x + (box.w - side) // 2
    y = box.y + (box.h - side) // 2
    x = max(0, min(x, img_w - side))
    y = max(0, min(y, img_h - side))
    return CropRect(x, y, side)


def _require(condition: bool, line: int, reason: str) -> None:
    if not condition:
        raise ParseError(line, reason)


def load_manifest(path: str | Path) -> tuple[list[ImageRecord], FeatureStore]:
    """Parse and validate a manifest; returns records plus the feature map."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_manifest(text)


def parse_manifest(text: str) -> tuple[list[ImageRecord], FeatureStore]:
    lines = text.splitlines()
    if not lines:
        raise ParseError(1, "empty file, expected a header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ParseError(1, f"bad header JSON: {e}") from None
    _require(isinstance(header, dict), 1, "header must be an object")
    _require(header.get("version") == MANIFEST_VERSION, 1, "unsupported manifest version")
    dim = header.get("feature_dim")
    _require(isinstance(dim, int) and dim > 0, 1, "header must declare feature_dim > 0")

    records: list[ImageRecord] = []
    store: FeatureStore = {}
    seen_images: set[str] = set()
    for lineno, raw_line in enumerate(lines[1:], start=2):
        if not raw_line.strip():
            continue
        try:
            raw = json.loads(raw_line)
        except json.JSONDecodeError as e:
            raise ParseError(lineno, f"bad JSON: {e}") from None
        _require(isinstance(raw, dict), lineno, "record must be an object")
        try:
            image_id = raw["image_id"]
            uri = raw["uri"]
            width = raw["width"]
            height = raw["height"]
            raw_boxes = raw["boxes"]
        except KeyError as e:
            raise ParseError(lineno, f"missing field {e}") from None
        _require(isinstance(image_id, str) and image_id != "", lineno, "bad image_id")
        if image_id in seen_images:
            raise DuplicateId(f"manifest line {lineno}: duplicate image_id {image_id!r}")
        seen_images.add(image_id)
        _require(
            isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0,
            lineno,
            "image width/height must be positive integers",
        )
        boxes: list[BoundingBox] = []
        for ordinal, raw_box in enumerate(raw_boxes, start=1):
            object_id = object_id_for(image_id, ordinal)
            try:
                x, y = raw_box["x"], raw_box["y"]
                w, h = raw_box["w"], raw_box["h"]
                score = raw_box["score"]
                feature_values = raw_box["feature"]
            except KeyError as e:
                raise ParseError(lineno, f"box {ordinal} missing field {e}") from None
            if w <= 0 or h <= 0:
                raise DegenerateBox(f"object {object_id}: box {w}x{h} has no area")
            if x + w <= 0 or y + h <= 0 or x >= width or y >= height:
                raise DegenerateBox(f"object {object_id}: box outside the image")
            _require(
                isinstance(score, (int, float)) and 0.0 <= score <= 1.0,
                lineno,
                f"box {ordinal}: score must lie in [0, 1]",
            )
            if len(feature_values) != dim:
                raise DimensionMismatch(
                    f"object {object_id}: feature has length "
                    f"{len(feature_values)}, manifest declares {dim}"
                )
            feature = FeatureVector.of(feature_values)
            if not feature.is_finite():
                raise ParseError(lineno, f"object {object_id}: non-finite feature entries")
            if feature.norm == 0.0:
                raise ZeroNorm(f"object {object_id}: zero feature vector")
            boxes.append(BoundingBox(x, y, w, h, float(score), feature))
            store[object_id] = feature
        records.append(ImageRecord(image_id, uri, width, height, tuple(boxes)))
    return records, store


def explode(records: list[ImageRecord]) -> list[ObjectInstance]:
    """One instance per box, ordered by (manifest order, box order)."""
    queue: list[ObjectInstance] = []
    for record in records:
        if not record.boxes:
            logger.info("SkippedNoDetections image_id=%s", record.image_id)
            continue
        for ordinal, box in enumerate(record.boxes, start=1):
            queue.append(
                ObjectInstance(
                    object_id=object_id_for(record.image_id, ordinal),
                    source=record.image_id,
                    crop=square_crop(box, record.width, record.height),
                    feature=box.feature,
                )
            )
    return queue


def write_manifest(path: str | Path, feature_dim: int, records: list[dict]) -> None:
    """Emit a manifest file from plain dict records (helper for generators)."""
    lines = [json.dumps({"version": MANIFEST_VERSION, "feature_dim": feature_dim})]
    lines.extend(json.dumps(r) for r in records)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
