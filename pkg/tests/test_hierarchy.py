import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vislabel.hierarchy import (
    AlreadyAssigned,
    EmptyDifferentia,
    EmptyGenus,
    Hierarchy,
    LabelPath,
    RootAssignment,
    UnknownParent,
    create_hierarchy,
)

NINE_PATHS = ["1", "1_1", "1_1_1", "1_1_1_1", "1_1_1_2", "1_1_2", "1_1_3", "1_2", "1_3"]
COUNTS_A = [17, 42, 21, 21, 22, 13, 12, 33, 10]


def add(h, parent, tag):
    return h.add_category(parent, genus=f"genus {tag}", differentia=f"diff {tag}", name=tag)


def build_nine_category_tree():
    """The nine-path tree; returns (h, {path_string: id})."""
    h = create_hierarchy()
    by_path = {"": h.root}
    for path in sorted(NINE_PATHS, key=lambda p: LabelPath.parse(p).segments):
        parent = "_".join(path.split("_")[:-1])
        by_path[path] = add(h, by_path[parent], path)
    return h, by_path


def test_create_hierarchy_is_a_bare_root():
    h = create_hierarchy()
    assert len(h.nodes) == 1
    assert h.node(h.root).members == []
    assert h.validate() == []
    assert str(h.path_label(h.root)) == ""


def test_first_child_gets_path_1():
    h = create_hierarchy()
    c = h.add_category(h.root, genus="g", differentia="")
    assert str(h.path_label(c)) == "1"


def test_ordinals_follow_construction_order():
    h = create_hierarchy()
    one = add(h, h.root, "1")
    oneone = add(h, one, "1_1")
    add(h, oneone, "a")
    second = add(h, oneone, "b")
    add(h, oneone, "c")
    leaf = add(h, second, "under-second")
    assert str(h.path_label(leaf)) == "1_1_2_1"


def test_grandchild_path():
    h = create_hierarchy()
    a = add(h, h.root, "a")
    b = add(h, a, "b")
    assert str(h.path_label(b)) == "1_1"


def test_add_requires_genus():
    h = create_hierarchy()
    with pytest.raises(EmptyGenus):
        h.add_category(h.root, genus="   ", differentia="d")


def test_add_requires_differentia_once_siblings_exist():
    h = create_hierarchy()
    add(h, h.root, "first")
    with pytest.raises(EmptyDifferentia):
        h.add_category(h.root, genus="g", differentia="")


def test_add_unknown_parent():
    h = create_hierarchy()
    with pytest.raises(UnknownParent):
        h.add_category(999, genus="g", differentia="d")


def test_nine_category_label_set():
    h, _ = build_nine_category_tree()
    labels = {str(h.path_label(c)) for c in h.nodes if c != h.root}
    assert labels == set(NINE_PATHS)


def test_member_counts_across_nine_categories():
    h, by_path = build_nine_category_tree()
    k = 0
    for path, count in zip(NINE_PATHS, COUNTS_A):
        for _ in range(count):
            k += 1
            h.assign_object(f"obj{k:03d}", by_path[path])
    assert k == 191
    counts = [len(h.node(by_path[p]).members) for p in NINE_PATHS]
    assert counts == COUNTS_A
    assert h.validate() == []


def test_reassignment_rejected():
    h = create_hierarchy()
    c = add(h, h.root, "c")
    h.assign_object("obj", c)
    with pytest.raises(AlreadyAssigned):
        h.assign_object("obj", c)


def test_root_cannot_hold_members():
    h = create_hierarchy()
    with pytest.raises(RootAssignment):
        h.assign_object("obj", h.root)


def test_round_trip_preserves_labels():
    h, _ = build_nine_category_tree()
    h2 = Hierarchy.loads(h.dumps())
    for c in h.nodes:
        assert h.path_label(c) == h2.path_label(c)


def test_serialize_is_idempotent_through_round_trip():
    h, by_path = build_nine_category_tree()
    h.assign_object("x1", by_path["1_2"])
    text = h.dumps()
    assert Hierarchy.loads(text).dumps() == text


def test_validator_flags_cycle_in_corrupt_file():
    h = create_hierarchy()
    a = add(h, h.root, "a")
    b = add(h, a, "b")
    data = h.to_dict()
    nodes = {n["id"]: n for n in data["nodes"]}
    nodes[a]["parent"] = b  # a <-> b now point at each other
    corrupt = Hierarchy.from_dict(data)
    rules = {v.rule for v in corrupt.validate()}
    assert "CycleDetected" in rules


def test_validator_flags_missing_differentia_in_corrupt_file():
    h = create_hierarchy()
    add(h, h.root, "a")
    add(h, h.root, "b")
    data = h.to_dict()
    data["nodes"][1]["differentia"] = ""
    corrupt = Hierarchy.from_dict(data)
    assert any(v.rule == "EmptyDifferentia" for v in corrupt.validate())


def test_validator_flags_duplicate_membership():
    h = create_hierarchy()
    a = add(h, h.root, "a")
    b = add(h, h.root, "b")
    data = h.to_dict()
    nodes = {n["id"]: n for n in data["nodes"]}
    nodes[a]["members"] = ["obj"]
    nodes[b]["members"] = ["obj"]
    corrupt = Hierarchy.from_dict(data)
    assert any(v.rule == "DuplicateMember" for v in corrupt.validate())


# -- randomized structure properties -------------------------------------------


def build_from_choices(choices):
    """Deterministic tree builder; each choice picks the parent of a new node."""
    h = create_hierarchy()
    ids = [h.root]
    for i, c in enumerate(choices):
        parent = ids[c % len(ids)]
        ids.append(add(h, parent, f"n{i}"))
    return h


@given(st.lists(st.integers(min_value=0, max_value=10_000), max_size=40))
@settings(max_examples=200)
def test_tree_property_nodes_equal_edges_plus_one(choices):
    h = build_from_choices(choices)
    edges = sum(len(n.children) for n in h.nodes.values())
    assert len(h.nodes) == edges + 1
    assert sorted(h.subtree(h.root)) == sorted(h.nodes)  # DFS reaches everything once


@given(st.lists(st.integers(min_value=0, max_value=10_000), max_size=40))
@settings(max_examples=200)
def test_labels_unique_and_prefix_consistent(choices):
    h = build_from_choices(choices)
    labels = {c: h.path_label(c) for c in h.nodes}
    rendered = [str(p) for p in labels.values()]
    assert len(set(rendered)) == len(rendered)
    # an ancestor's label is a segment-prefix of each descendant's label
    for c, path in labels.items():
        for d in h.subtree(c):
            assert path.is_prefix_of(labels[d])


@given(st.lists(st.integers(min_value=0, max_value=10_000), max_size=40))
@settings(max_examples=200)
def test_serialization_round_trip_is_byte_stable(choices):
    h = build_from_choices(choices)
    text = h.dumps()
    assert Hierarchy.loads(text).dumps() == text
    assert json.loads(text)["root"] == h.root


@given(st.lists(st.integers(min_value=0, max_value=10_000), max_size=30))
@settings(max_examples=100)
def test_same_add_sequence_same_labels(choices):
    h1 = build_from_choices(choices)
    h2 = build_from_choices(choices)
    assert h1.dumps() == h2.dumps()


def test_label_path_parse_and_order():
    assert LabelPath.parse("1_2_3").segments == (1, 2, 3)
    assert str(LabelPath(())) == ""
    assert LabelPath.parse("1_1").is_prefix_of(LabelPath.parse("1_1_2"))
    assert not LabelPath.parse("1_2").is_prefix_of(LabelPath.parse("1_1_2"))
    assert sorted([LabelPath.parse("1_2"), LabelPath.parse("1_1_1")])[0] == LabelPath.parse("1_1_1")
