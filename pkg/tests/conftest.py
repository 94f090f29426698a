import json

from vislabel.fixtures import Fixture
from vislabel.hierarchy import Hierarchy, create_hierarchy
from vislabel.ingestion import ObjectInstance, explode, parse_manifest
from vislabel.loops import CentroidCache, label_object


def fixture_queue(fx: Fixture):
    """Parse a fixture's manifest records through the real ingestion path."""
    lines = [json.dumps({"version": 1, "feature_dim": fx.feature_dim})]
    lines.extend(json.dumps(r) for r in fx.manifest_records)
    records, store = parse_manifest("\n".join(lines) + "\n")
    return explode(records), store


def seeded_copy(reference: Hierarchy) -> Hierarchy:
    """Fresh hierarchy with the reference's structure and descriptors, no members."""
    h = create_hierarchy()
    order = sorted(
        (n for n in reference.nodes.values() if not n.is_root),
        key=lambda n: reference.path_label(n.id),
    )
    id_map = {reference.root: h.root}
    for node in order:
        id_map[node.id] = h.add_category(
            id_map[node.parent], genus=node.genus, differentia=node.differentia, name=node.name
        )
    return h


def run_all_episodes(queue: list[ObjectInstance], h: Hierarchy, store, oracle):
    """Label the whole queue, keeping rankings fast via the running centroids."""
    cache = CentroidCache(h, store)
    transcripts = []
    for obj in queue:
        transcript, delta = label_object(obj, h, store, oracle, centroid_fn=cache.centroid)
        cache.on_assigned(obj.object_id, delta.assigned_to)
        transcripts.append(transcript)
    return transcripts
