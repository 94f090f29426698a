"""Cosine ranking of categories against an object's feature vector.

Category prototypes are subtree centroids: the component-wise mean over the
stored features of every member in the category's subtree, renormalized to
unit length. The choice is deliberately simple and swappable; rankings only
ever feed question *order*, never verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .hierarchy import CategoryId, Hierarchy


class SimilarityError(Exception):
    pass


class DimensionMismatch(SimilarityError):
    pass


class ZeroNorm(SimilarityError):
    pass


class EmptyCategory(SimilarityError):
    pass


# Score given to categories whose subtree has no usable centroid yet, so
# freshly created nodes still take part in a traversal. Real cosines live
# in [-1, 1]; the sentinel always sorts after them.
EMPTY_SCORE = -2.0

TIE_BREAK_RULE = "ascending_category_id"


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length real vector with its Euclidean norm cached."""

    values: tuple[float, ...]
    norm: float

    @classmethod
    def of(cls, values) -> "FeatureVector":
        vals = tuple(float(v) for v in values)
        return cls(vals, math.sqrt(math.fsum(v * v for v in vals)))

    def __len__(self) -> int:
        return len(self.values)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.values)

    def scaled(self, c: float) -> "FeatureVector":
        return FeatureVector.of(v * c for v in self.values)


# Object id -> feature vector, loaded from the ingestion manifest.
FeatureStore = dict[str, FeatureVector]


@dataclass(frozen=True)
class CandidateRanking:
    """Deterministic total order over one sibling set.

    entries hold (category, score) with scores non-increasing; equal scores
    break ties toward the lower category id. Scores are rounded to the 1e-9
    numeric resolution so ordering cannot hinge on float summation noise.
    Categories ranked with the EMPTY_SCORE sentinel are repeated in
    `flagged`.
    """

    entries: tuple[tuple[CategoryId, float], ...]
    tie_break: str = TIE_BREAK_RULE
    flagged: tuple[CategoryId, ...] = field(default=())

    def order(self) -> list[CategoryId]:
        return [cat for cat, _ in self.entries]


def cosine(a: FeatureVector, b: FeatureVector) -> float:
    """dot(a,b) / (|a||b|), clamped into [-1, 1] against rounding spill."""
    if len(a) != len(b):
        raise DimensionMismatch(f"{len(a)} vs {len(b)}")
    if a.norm == 0.0 or b.norm == 0.0:
        raise ZeroNorm("cosine undefined for zero-norm vectors")
    score = math.fsum(x * y for x, y in zip(a.values, b.values)) / (a.norm * b.norm)
    return max(-1.0, min(1.0, score))


def category_centroid(h: Hierarchy, cat: CategoryId, store: FeatureStore) -> FeatureVector:
    """Unit-normalized mean feature over all members in cat's subtree."""
    features = [
        store[object_id]
        for node_id in h.subtree(cat)
        for object_id in h.node(node_id).members
        if object_id in store
    ]
    if not features:
        raise EmptyCategory(f"category {cat} has no members with stored features")
    dim = len(features[0])
    for f in features:
        if len(f) != dim:
            raise DimensionMismatch(f"{len(f)} vs {dim}")
    count = len(features)
    mean = FeatureVector.of(
        math.fsum(f.values[i] for f in features) / count for i in range(dim)
    )
    if mean.norm == 0.0:
        raise ZeroNorm(f"members of category {cat} cancel to a zero mean")
    return FeatureVector.of(v / mean.norm for v in mean.values)


def rank_candidates(
    obj: FeatureVector,
    siblings: list[CategoryId],
    h: Hierarchy,
    store: FeatureStore,
    centroid_fn=None,
) -> CandidateRanking:
    """Order one sibling set by similarity to obj, best first.

    Siblings without a computable centroid are kept, flagged, and sorted
    last via the sentinel score. `centroid_fn(cat) -> FeatureVector` may
    replace the subtree-centroid lookup (raising EmptyCategory/ZeroNorm to
    flag a category).
    """
    if not siblings:
        raise ValueError("rank_candidates needs a non-empty sibling list")
    if centroid_fn is None:
        centroid_fn = lambda cat: category_centroid(h, cat, store)
    scored: list[tuple[CategoryId, float]] = []
    flagged: list[CategoryId] = []
    for cat in siblings:
        try:
            score = round(cosine(obj, centroid_fn(cat)), 9)
        except (EmptyCategory, ZeroNorm):
            score = EMPTY_SCORE
            flagged.append(cat)
        scored.append((cat, score))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return CandidateRanking(entries=tuple(scored), flagged=tuple(sorted(flagged)))
