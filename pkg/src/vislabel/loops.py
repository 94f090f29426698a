"""The interrogation engine that labels one object at a time.

Each object runs one episode. The episode first sweeps the top layer in
similarity order asking genus questions (does the object share this
category's genus?). A layer exhausted without a match means a brand-new
top-layer category must be described. After a genus match the episode
refines: the candidate's children are swept in similarity order with
differentia questions (is the object visually distinct from this child?).
The first "not distinct" answer descends into that child and the sweep
repeats one level deeper; a leaf ends the episode. When every child is
distinct the episode asks for a new-category decision: either a new child
is described and the object becomes its first member, or the decision is
declined and the object belongs to the candidate itself.

Episodes are pure until their outcome: the engine yields questions from a
generator and only mutates the hierarchy once the outcome is known, so an
oracle failure mid-episode leaves no trace. Rankings are frozen at layer
entry.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Generator, Iterator, Protocol

from .hierarchy import Category, CategoryId, Hierarchy, LabelPath
from .ingestion import ObjectInstance
from .similarity import (
    EmptyCategory,
    FeatureStore,
    FeatureVector,
    ZeroNorm,
    category_centroid,
    rank_candidates,
)

GENUS = "genus"
DIFFERENTIA = "differentia"
NEW_CATEGORY = "new_category"


class OracleUnavailable(Exception):
    """The oracle cannot answer; the current episode must be abandoned."""


class ProtocolError(Exception):
    """The oracle's response is not usable at this point of the episode."""


class UnknownObject(Exception):
    pass


@dataclass(frozen=True)
class Question:
    """One prompt for the oracle, fully self-describing.

    kind "genus"/"differentia" expects a boolean verdict about category_id;
    kind "new_category" asks for a decision at category_id (the candidate):
    describe a new child, or decline because the object belongs there as-is.
    """

    kind: str
    object_id: str
    category_id: CategoryId
    seq: int
    prompt: str
    category_path: str
    category_name: str | None
    genus: str
    differentia: str


@dataclass(frozen=True)
class NewCategoryPayload:
    name: str | None
    genus: str
    differentia: str


@dataclass(frozen=True)
class Answer:
    seq: int
    verdict: bool
    new_category: NewCategoryPayload | None = None


@dataclass(frozen=True)
class Step:
    question: Question
    answer: Answer


@dataclass(frozen=True)
class Outcome:
    kind: str  # "assigned" | "created"
    category: CategoryId
    path: str


@dataclass
class Transcript:
    object_id: str
    steps: list[Step]
    outcome: Outcome

    def question_count(self) -> int:
        """Genus + differentia questions; new-category decisions excluded."""
        return sum(1 for s in self.steps if s.question.kind in (GENUS, DIFFERENTIA))

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "steps": [
                {
                    "seq": s.question.seq,
                    "kind": s.question.kind,
                    "category": s.question.category_id,
                    "verdict": s.answer.verdict,
                }
                for s in self.steps
            ],
            "outcome": {
                "type": self.outcome.kind,
                "category": self.outcome.category,
                "path": self.outcome.path,
            },
        }


class Oracle(Protocol):
    def answer(self, question: Question) -> Answer: ...

    def describe_new(self, object_id: str, parent: Category) -> NewCategoryPayload | None: ...


CentroidFn = Callable[[CategoryId], FeatureVector]


# -- prompt rendering --------------------------------------------------------


def _display_label(node: Category, path: LabelPath) -> str:
    if node.name:
        return node.name
    return str(path) if path.segments else "root"


def render_prompt(kind: str, node: Category, path: LabelPath) -> str:
    label = _display_label(node, path)
    if kind == GENUS:
        return f'Does the object share the visual genus of "{label}": {node.genus}?'
    if kind == DIFFERENTIA:
        return f'Is the object visually distinct from "{label}" ({node.differentia})?'
    if kind == NEW_CATEGORY:
        return (
            f'Nothing under "{label}" matches. Describe a new category for the '
            f'object, or confirm it belongs to "{label}" as-is.'
        )
    raise ValueError(f"unknown question kind {kind!r}")


def _question(kind: str, object_id: str, cat: CategoryId, h: Hierarchy, seq: int) -> Question:
    node = h.node(cat)
    path = h.path_label(cat)
    return Question(
        kind=kind,
        object_id=object_id,
        category_id=cat,
        seq=seq,
        prompt=render_prompt(kind, node, path),
        category_path=str(path),
        category_name=node.name,
        genus=node.genus,
        differentia=node.differentia,
    )


# -- episode generators ------------------------------------------------------


@dataclass(frozen=True)
class EpisodePlan:
    """Terminal intent of an episode; applying it is the only mutation."""

    object_id: str
    assign_to: CategoryId | None
    create_under: CategoryId | None
    payload: NewCategoryPayload | None
    visited_layers: tuple[int, ...]

    @property
    def creates(self) -> bool:
        return self.create_under is not None


@dataclass(frozen=True)
class _VerticalResult:
    matched: CategoryId | None
    payload: NewCategoryPayload | None


@dataclass(frozen=True)
class _HorizontalResult:
    assign_to: CategoryId | None
    create_under: CategoryId | None
    payload: NewCategoryPayload | None


EpisodeGen = Generator[Question, Answer, EpisodePlan]


def _vertical_gen(
    obj: ObjectInstance,
    layer: list[CategoryId],
    anchor: CategoryId,
    h: Hierarchy,
    store: FeatureStore,
    centroid_fn: CentroidFn | None,
    seq: Iterator[int],
) -> Generator[Question, Answer, _VerticalResult]:
    if layer:
        ranking = rank_candidates(obj.feature, layer, h, store, centroid_fn)
        for cat in ranking.order():
            answer = yield _question(GENUS, obj.object_id, cat, h, next(seq))
            if answer.verdict:
                return _VerticalResult(matched=cat, payload=None)
    answer = yield _question(NEW_CATEGORY, obj.object_id, anchor, h, next(seq))
    if answer.new_category is None:
        raise ProtocolError(
            "layer exhausted with no genus match; a new category description is required"
        )
    return _VerticalResult(matched=None, payload=answer.new_category)


def _horizontal_gen(
    obj: ObjectInstance,
    candidate: CategoryId,
    h: Hierarchy,
    store: FeatureStore,
    centroid_fn: CentroidFn | None,
    seq: Iterator[int],
    visited: list[int],
) -> Generator[Question, Answer, _HorizontalResult]:
    current = candidate
    while True:
        kids = h.children(current)
        if not kids:
            return _HorizontalResult(assign_to=current, create_under=None, payload=None)
        visited.append(len(kids))
        ranking = rank_candidates(obj.feature, kids, h, store, centroid_fn)
        descend: CategoryId | None = None
        for child in ranking.order():
            answer = yield _question(DIFFERENTIA, obj.object_id, child, h, next(seq))
            if not answer.verdict:  # not distinct: same category, refine into it
                descend = child
                break
        if descend is not None:
            current = descend
            continue
        # every child is distinct: new subcategory, or the candidate itself
        answer = yield _question(NEW_CATEGORY, obj.object_id, current, h, next(seq))
        if answer.new_category is None:
            return _HorizontalResult(assign_to=current, create_under=None, payload=None)
        return _HorizontalResult(
            assign_to=None, create_under=current, payload=answer.new_category
        )


def episode_gen(
    obj: ObjectInstance,
    h: Hierarchy,
    store: FeatureStore,
    centroid_fn: CentroidFn | None = None,
) -> EpisodeGen:
    """Full episode over the current hierarchy; yields questions, returns the plan."""
    seq = itertools.count(1)
    layer = h.children(h.root)
    visited = [len(layer)]
    vres = yield from _vertical_gen(obj, layer, h.root, h, store, centroid_fn, seq)
    if vres.matched is None:
        return EpisodePlan(
            object_id=obj.object_id,
            assign_to=None,
            create_under=h.root,
            payload=vres.payload,
            visited_layers=tuple(visited),
        )
    hres = yield from _horizontal_gen(obj, vres.matched, h, store, centroid_fn, seq, visited)
    return EpisodePlan(
        object_id=obj.object_id,
        assign_to=hres.assign_to,
        create_under=hres.create_under,
        payload=hres.payload,
        visited_layers=tuple(visited),
    )


# -- driving an episode with an oracle ----------------------------------------


def ask_oracle(oracle: Oracle, question: Question, h: Hierarchy) -> Answer:
    if question.kind == NEW_CATEGORY:
        payload = oracle.describe_new(question.object_id, h.node(question.category_id))
        return Answer(seq=question.seq, verdict=payload is not None, new_category=payload)
    answer = oracle.answer(question)
    if answer.seq != question.seq:
        answer = Answer(seq=question.seq, verdict=answer.verdict, new_category=answer.new_category)
    return answer


def _drive(gen, oracle: Oracle, h: Hierarchy):
    steps: list[Step] = []
    try:
        question = next(gen)
        while True:
            answer = ask_oracle(oracle, question, h)
            steps.append(Step(question, answer))
            question = gen.send(answer)
    except StopIteration as stop:
        return steps, stop.value


@dataclass(frozen=True)
class EpisodeDelta:
    created: CategoryId | None
    assigned_to: CategoryId
    visited_layers: tuple[int, ...] = ()


def apply_plan(h: Hierarchy, obj: ObjectInstance, plan: EpisodePlan) -> EpisodeDelta:
    """Perform the episode's single hierarchy mutation."""
    if plan.creates:
        assert plan.payload is not None
        new_id = h.add_category(
            plan.create_under, plan.payload.genus, plan.payload.differentia, plan.payload.name
        )
        h.assign_object(obj.object_id, new_id)
        return EpisodeDelta(
            created=new_id, assigned_to=new_id, visited_layers=plan.visited_layers
        )
    assert plan.assign_to is not None
    h.assign_object(obj.object_id, plan.assign_to)
    return EpisodeDelta(
        created=None, assigned_to=plan.assign_to, visited_layers=plan.visited_layers
    )


def plan_outcome(plan: EpisodePlan, delta: EpisodeDelta, h: Hierarchy) -> Outcome:
    kind = "created" if plan.creates else "assigned"
    return Outcome(kind=kind, category=delta.assigned_to, path=str(h.path_label(delta.assigned_to)))


# -- public loop operations ----------------------------------------------------


@dataclass(frozen=True)
class VerticalOutcome:
    """Matched an existing category, or created (and filled) a new one."""

    matched: CategoryId | None
    created: CategoryId | None
    steps: list[Step]


@dataclass(frozen=True)
class AssignedOutcome:
    category: CategoryId
    created: bool
    steps: list[Step]


def vertical_loop(
    obj: ObjectInstance,
    layer: list[CategoryId],
    h: Hierarchy,
    store: FeatureStore,
    oracle: Oracle,
) -> VerticalOutcome:
    """Sweep one layer with genus questions; create a category on exhaustion."""
    anchor = h.node(layer[0]).parent if layer else h.root
    if anchor is None:
        anchor = h.root
    seq = itertools.count(1)
    gen = _vertical_gen(obj, layer, anchor, h, store, None, seq)
    steps, result = _drive(gen, oracle, h)
    if result.matched is not None:
        return VerticalOutcome(matched=result.matched, created=None, steps=steps)
    new_id = h.add_category(
        anchor, result.payload.genus, result.payload.differentia, result.payload.name
    )
    h.assign_object(obj.object_id, new_id)
    return VerticalOutcome(matched=None, created=new_id, steps=steps)


def horizontal_loop(
    obj: ObjectInstance,
    candidate: CategoryId,
    h: Hierarchy,
    store: FeatureStore,
    oracle: Oracle,
) -> AssignedOutcome:
    """Refine below a genus-matched candidate until the object is assigned."""
    seq = itertools.count(1)
    gen = _horizontal_gen(obj, candidate, h, store, None, seq, [])
    steps, result = _drive(gen, oracle, h)
    if result.create_under is not None:
        new_id = h.add_category(
            result.create_under,
            result.payload.genus,
            result.payload.differentia,
            result.payload.name,
        )
        h.assign_object(obj.object_id, new_id)
        return AssignedOutcome(category=new_id, created=True, steps=steps)
    h.assign_object(obj.object_id, result.assign_to)
    return AssignedOutcome(category=result.assign_to, created=False, steps=steps)


def label_object(
    obj: ObjectInstance,
    h: Hierarchy,
    store: FeatureStore,
    oracle: Oracle,
    centroid_fn: CentroidFn | None = None,
) -> tuple[Transcript, EpisodeDelta]:
    """Run one full episode; mutations happen only after the outcome is known."""
    gen = episode_gen(obj, h, store, centroid_fn)
    steps, plan = _drive(gen, oracle, h)
    delta = apply_plan(h, obj, plan)
    outcome = plan_outcome(plan, delta, h)
    return Transcript(obj.object_id, steps, outcome), delta


# -- incremental centroids -----------------------------------------------------


class CentroidCache:
    """Running subtree feature sums, so session rankings stay O(depth).

    Matches category_centroid() up to float summation order. Valid only
    while mutations go through on_assigned(); rebuilt cheaply on replay.
    """

    def __init__(self, h: Hierarchy, store: FeatureStore):
        self._h = h
        self._sums: dict[CategoryId, list[float]] = {}
        self._counts: dict[CategoryId, int] = {}
        self._store = store
        for node in h.nodes.values():
            for object_id in node.members:
                if object_id in store:
                    self._accumulate(node.id, store[object_id])

    def _accumulate(self, cat: CategoryId, feature: FeatureVector) -> None:
        cur: CategoryId | None = cat
        while cur is not None:
            sums = self._sums.get(cur)
            if sums is None:
                self._sums[cur] = list(feature.values)
            else:
                for i, v in enumerate(feature.values):
                    sums[i] += v
            self._counts[cur] = self._counts.get(cur, 0) + 1
            cur = self._h.node(cur).parent

    def on_assigned(self, object_id: str, cat: CategoryId) -> None:
        if object_id in self._store:
            self._accumulate(cat, self._store[object_id])

    def centroid(self, cat: CategoryId) -> FeatureVector:
        count = self._counts.get(cat, 0)
        if count == 0:
            raise EmptyCategory(f"category {cat} has no members with stored features")
        mean = FeatureVector.of(v / count for v in self._sums[cat])
        if mean.norm == 0.0:
            raise ZeroNorm(f"members of category {cat} cancel to a zero mean")
        return mean


# -- oracles ---------------------------------------------------------------------


class ScriptedOracle:
    """Replays canned verdicts and payloads in order; raises when exhausted."""

    def __init__(
        self,
        verdicts: list[bool] | None = None,
        payloads: list[NewCategoryPayload | None] | None = None,
    ):
        self._verdicts = list(verdicts or [])
        self._payloads = list(payloads or [])
        self.questions: list[Question] = []

    def answer(self, question: Question) -> Answer:
        self.questions.append(question)
        if not self._verdicts:
            raise OracleUnavailable("script ran out of verdicts")
        return Answer(seq=question.seq, verdict=self._verdicts.pop(0))

    def describe_new(self, object_id: str, parent: Category) -> NewCategoryPayload | None:
        if not self._payloads:
            raise OracleUnavailable("script ran out of payloads")
        return self._payloads.pop(0)


class SimulatedOracle:
    """Answers from a reference taxonomy and per-object ground-truth paths.

    Working categories are recognized by their descriptor triple (name,
    genus, differentia), which must be unique across the reference tree;
    categories whose descriptors match nothing are treated as off the truth
    path. A genus question is affirmed when the recognized category lies on
    the root-to-truth path; a differentia question is denied (not distinct)
    in exactly the same case. A new-category decision is declined when the
    parent already is the object's true category, and otherwise answered
    with the descriptors of the reference child one step toward the truth.

    Noise: with probability flip_p an object's episode is corrupted and
    every one of its genus/differentia verdicts is inverted. Decisions are
    never corrupted. The corruption draw depends only on (seed, object_id),
    so behavior is identical across runs and stable under session resume.
    """

    def __init__(
        self,
        reference: Hierarchy,
        ground_truth: dict[str, str],
        flip_p: float = 0.0,
        seed: int = 0,
    ):
        self._reference = reference
        self._truth: dict[str, LabelPath] = {
            obj: LabelPath.parse(path) if isinstance(path, str) else path
            for obj, path in ground_truth.items()
        }
        for obj, path in self._truth.items():
            reference.node_at(path)  # raises if the truth path is not in the reference
        self._by_descriptor: dict[tuple[str | None, str, str], LabelPath] = {}
        for node in reference.nodes.values():
            if node.is_root:
                continue
            key = (node.name, node.genus, node.differentia)
            if key in self._by_descriptor:
                raise ValueError(
                    f"reference descriptors must be unique; duplicate triple {key!r}"
                )
            self._by_descriptor[key] = reference.path_label(node.id)
        self._flip_p = float(flip_p)
        self._seed = seed
        self._corrupted: dict[str, bool] = {}

    # one draw per object, keyed by (seed, object_id)
    def _episode_corrupted(self, object_id: str) -> bool:
        if object_id not in self._corrupted:
            draw = random.Random(f"{self._seed}:{object_id}").random()
            self._corrupted[object_id] = draw < self._flip_p
        return self._corrupted[object_id]

    def _truth_of(self, object_id: str) -> LabelPath:
        try:
            return self._truth[object_id]
        except KeyError:
            raise UnknownObject(f"no ground truth for object {object_id!r}") from None

    def _resolve(
        self, name: str | None, genus: str, differentia: str, is_root: bool
    ) -> LabelPath | None:
        if is_root:
            return LabelPath(())
        return self._by_descriptor.get((name, genus, differentia))

    def verdict_for(
        self, object_id: str, kind: str, name: str | None, genus: str, differentia: str
    ) -> bool:
        truth = self._truth_of(object_id)
        ref = self._resolve(name, genus, differentia, is_root=False)
        on_truth_path = ref is not None and ref.is_prefix_of(truth)
        if kind == GENUS:
            verdict = on_truth_path
        elif kind == DIFFERENTIA:
            verdict = not on_truth_path
        else:
            raise ValueError(f"no verdict for question kind {kind!r}")
        if self._episode_corrupted(object_id):
            verdict = not verdict
        return verdict

    def new_category_for(
        self,
        object_id: str,
        parent_name: str | None,
        parent_genus: str,
        parent_differentia: str,
        parent_is_root: bool,
    ) -> NewCategoryPayload | None:
        truth = self._truth_of(object_id)
        if self._episode_corrupted(object_id):
            # a corrupted annotator invents a bogus category; its descriptors
            # match nothing in the reference, so it never attracts later objects
            return NewCategoryPayload(
                name=f"misc-{object_id}",
                genus=f"misjudged visual traits around {object_id}",
                differentia=f"misjudged distinguishing marks around {object_id}",
            )
        ref_parent = self._resolve(parent_name, parent_genus, parent_differentia, parent_is_root)
        if ref_parent is None or not ref_parent.is_prefix_of(truth):
            return None  # off the truth path: nothing honest to describe
        if ref_parent == truth:
            return None  # the object belongs to the parent itself
        child_path = LabelPath(truth.segments[: ref_parent.depth + 1])
        node = self._reference.node(self._reference.node_at(child_path))
        return NewCategoryPayload(name=node.name, genus=node.genus, differentia=node.differentia)

    def answer(self, question: Question) -> Answer:
        verdict = self.verdict_for(
            question.object_id,
            question.kind,
            question.category_name,
            question.genus,
            question.differentia,
        )
        return Answer(seq=question.seq, verdict=verdict)

    def describe_new(self, object_id: str, parent: Category) -> NewCategoryPayload | None:
        return self.new_category_for(
            object_id, parent.name, parent.genus, parent.differentia, parent.is_root
        )


def simulated_oracle(
    reference: Hierarchy, ground_truth: dict[str, str], flip_p: float = 0.0, seed: int = 0
) -> SimulatedOracle:
    return SimulatedOracle(reference, ground_truth, flip_p=flip_p, seed=seed)
