import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vislabel.ingestion import (
    BoundingBox,
    DegenerateBox,
    DuplicateId,
    ParseError,
    explode,
    load_manifest,
    parse_manifest,
    square_crop,
    write_manifest,
)
from vislabel.similarity import DimensionMismatch, FeatureVector, ZeroNorm


def box(x, y, w, h, score=0.9, feature=(1.0, 0.0, 0.0, 0.0)):
    return BoundingBox(x, y, w, h, score, FeatureVector.of(feature))


def manifest_text(records, dim=4):
    lines = [json.dumps({"version": 1, "feature_dim": dim})]
    lines.extend(json.dumps(r) for r in records)
    return "\n".join(lines) + "\n"


def record(image_id, boxes, width=100, height=100):
    return {
        "image_id": image_id,
        "uri": f"file:///{image_id}.jpg",
        "width": width,
        "height": height,
        "boxes": boxes,
    }


def raw_box(x=10, y=10, w=20, h=20, score=0.8, feature=(1.0, 0.0, 0.0, 0.0)):
    return {"x": x, "y": y, "w": w, "h": h, "score": score, "feature": list(feature)}


# -- square_crop ------------------------------------------------------------------


def test_square_box_crops_to_itself():
    assert square_crop(box(10, 10, 20, 20), 100, 100).as_tuple() == (10, 10, 20, 20)


def test_wide_box_at_edge_shifts_to_fit():
    # side 40 around (0,0,40,20): ideal y0 = -10, shifted down to 0
    assert square_crop(box(0, 0, 40, 20), 100, 100).as_tuple() == (0, 0, 40, 40)


def test_corner_box_that_fits_stays_put():
    assert square_crop(box(90, 90, 8, 8), 100, 100).as_tuple() == (90, 90, 8, 8)


def test_oversized_box_clamps_to_short_image_side():
    crop = square_crop(box(-50, -50, 300, 300), 200, 120)
    assert crop.side == 120
    assert crop.x >= 0 and crop.x + crop.side <= 200
    assert crop.y == 0


def test_degenerate_box_rejected():
    with pytest.raises(DegenerateBox):
        square_crop(box(10, 10, 0, 5), 100, 100)
    with pytest.raises(DegenerateBox):
        square_crop(box(200, 10, 5, 5), 100, 100)  # fully outside


@given(st.data())
@settings(max_examples=500)
def test_crop_is_square_and_in_bounds_for_any_valid_box(data):
    img_w = data.draw(st.integers(min_value=1, max_value=500))
    img_h = data.draw(st.integers(min_value=1, max_value=500))
    # boxes may hang over the edges as long as they intersect the image
    w = data.draw(st.integers(min_value=1, max_value=600))
    h = data.draw(st.integers(min_value=1, max_value=600))
    x = data.draw(st.integers(min_value=1 - w, max_value=img_w - 1))
    y = data.draw(st.integers(min_value=1 - h, max_value=img_h - 1))
    crop = square_crop(box(x, y, w, h), img_w, img_h)
    assert crop.side >= 1
    assert 0 <= crop.x and crop.x + crop.side <= img_w
    assert 0 <= crop.y and crop.y + crop.side <= img_h


# -- manifests ---------------------------------------------------------------------


def test_header_only_manifest_is_valid_and_empty():
    records, store = parse_manifest(manifest_text([]))
    assert records == [] and store == {}


def test_two_boxes_become_two_ordinal_named_objects():
    records, store = parse_manifest(
        manifest_text([record("img1", [raw_box(), raw_box(x=50)])])
    )
    queue = explode(records)
    assert [o.object_id for o in queue] == ["img1#1", "img1#2"]
    assert set(store) == {"img1#1", "img1#2"}


def test_feature_length_must_match_declared_dim():
    bad = record("img1", [raw_box(feature=(1.0, 0.0, 0.0))])
    with pytest.raises(DimensionMismatch, match="img1#1"):
        parse_manifest(manifest_text([bad], dim=4))


def test_duplicate_image_ids_rejected():
    with pytest.raises(DuplicateId):
        parse_manifest(manifest_text([record("img1", []), record("img1", [])]))


def test_bad_json_names_the_line():
    text = manifest_text([record("img1", [])]) + "{oops\n"
    with pytest.raises(ParseError, match="line 3"):
        parse_manifest(text)


def test_zero_feature_rejected_at_ingestion():
    bad = record("img1", [raw_box(feature=(0.0, 0.0, 0.0, 0.0))])
    with pytest.raises(ZeroNorm, match="img1#1"):
        parse_manifest(manifest_text([bad]))


def test_non_finite_feature_rejected():
    bad = record("img1", [raw_box(feature=(float("nan"), 0.0, 0.0, 1.0))])
    with pytest.raises(ParseError):
        parse_manifest(manifest_text([bad]))


def test_score_out_of_range_rejected():
    with pytest.raises(ParseError, match="score"):
        parse_manifest(manifest_text([record("img1", [raw_box(score=1.5)])]))


def test_degenerate_box_in_manifest():
    with pytest.raises(DegenerateBox, match="img1#1"):
        parse_manifest(manifest_text([record("img1", [raw_box(w=0)])]))


def test_missing_header_fails():
    with pytest.raises(ParseError):
        parse_manifest(json.dumps(record("img1", [])) + "\n")


# -- explode ------------------------------------------------------------------------


def test_queue_order_is_manifest_then_box_order():
    records, _ = parse_manifest(
        manifest_text(
            [
                record("a", [raw_box(), raw_box(x=40)]),
                record("b", [raw_box(), raw_box(x=40)]),
                record("c", [raw_box(), raw_box(x=40)]),
            ]
        )
    )
    queue = explode(records)
    assert [o.object_id for o in queue] == ["a#1", "a#2", "b#1", "b#2", "c#1", "c#2"]


def test_zero_detection_images_contribute_nothing(caplog):
    records, _ = parse_manifest(manifest_text([record("empty", []), record("a", [raw_box()])]))
    with caplog.at_level("INFO", logger="vislabel.ingestion"):
        queue = explode(records)
    assert [o.object_id for o in queue] == ["a#1"]
    assert any("SkippedNoDetections" in message for message in caplog.messages)


def test_double_run_yields_identical_queue(tmp_path):
    rng = random.Random(5)
    raw_records = []
    for i in range(6):
        boxes = [
            raw_box(x=rng.randint(0, 60), y=rng.randint(0, 60), w=rng.randint(5, 40),
                    h=rng.randint(5, 40), feature=(rng.random() + 0.1, 0.0, 0.0, 0.0))
            for _ in range(rng.randint(0, 3))
        ]
        raw_records.append(record(f"img{i}", boxes))
    path = tmp_path / "manifest.jsonl"
    write_manifest(path, 4, raw_records)
    records1, _ = load_manifest(path)
    records2, _ = load_manifest(path)
    q1, q2 = explode(records1), explode(records2)
    assert [(o.object_id, o.crop) for o in q1] == [(o.object_id, o.crop) for o in q2]
    assert len(q1) == sum(len(r["boxes"]) for r in raw_records)
