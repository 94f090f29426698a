"""Event-sourced labeling sessions.

A session is an append-only JSON Lines log (header line + events) plus the
state folded from it. Every state change is an event; replaying the log
from scratch reproduces the hierarchy, the assignments and the pending
question exactly, which doubles as crash recovery. The engine itself runs
in the command layer only: answering rebuilds the current episode's
generator from the recorded answers, feeds it the new answer, and persists
whatever the engine does next as more events. One question is pending at a
time.

Events: ManifestLoaded, QuestionIssued, AnswerReceived, CategoryCreated,
ObjectAssigned, EpisodeAborted.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .fixtures import load_reference_bundle
from .hierarchy import CategoryId, Hierarchy, create_hierarchy
from .ingestion import (
    BoundingBox,
    ImageRecord,
    ObjectInstance,
    explode,
    load_manifest,
)
from .loops import (
    GENUS,
    DIFFERENTIA,
    NEW_CATEGORY,
    Answer,
    CentroidCache,
    EpisodePlan,
    NewCategoryPayload,
    Question,
    SimulatedOracle,
    ask_oracle,
    episode_gen,
    OracleUnavailable,
)
from .similarity import FeatureStore, FeatureVector, TIE_BREAK_RULE

LOG_VERSION = 1
DATASET_VERSION = 1
TRANSCRIPTS_VERSION = 1

MANIFEST_LOADED = "ManifestLoaded"
QUESTION_ISSUED = "QuestionIssued"
ANSWER_RECEIVED = "AnswerReceived"
CATEGORY_CREATED = "CategoryCreated"
OBJECT_ASSIGNED = "ObjectAssigned"
EPISODE_ABORTED = "EpisodeAborted"


class SessionError(Exception):
    pass


class SequenceGap(SessionError):
    pass


class PersistFailure(SessionError):
    pass


class ReplayMismatch(SessionError):
    """The log disagrees with what deterministic re-execution would do."""


class NoQuestionPending(SessionError):
    pass


class StaleQuestion(SessionError):
    def __init__(self, message: str, pending: dict | None):
        super().__init__(message)
        self.pending = pending


class BadAnswer(SessionError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    session_id: str
    feature_dim: int
    tie_break: str = TIE_BREAK_RULE
    oracle_mode: str = "interactive"  # "interactive" | "simulated"
    flip_p: float = 0.0
    seed: int = 0
    manifest: str | None = None
    reference: str | None = None
    seed_hierarchy: bool = True

    def __post_init__(self):
        if self.oracle_mode not in ("interactive", "simulated"):
            raise SessionError(f"unknown oracle mode {self.oracle_mode!r}")
        if self.tie_break != TIE_BREAK_RULE:
            raise SessionError(f"unknown tie-break rule {self.tie_break!r}")
        if not (0.0 <= self.flip_p <= 1.0):
            raise SessionError("flip_p must lie in [0, 1]")
        if self.oracle_mode == "simulated" and not self.reference:
            raise SessionError("simulated sessions need a reference bundle")

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "feature_dim": self.feature_dim,
            "tie_break": self.tie_break,
            "oracle_mode": self.oracle_mode,
            "flip_p": self.flip_p,
            "seed": self.seed,
            "manifest": self.manifest,
            "reference": self.reference,
            "seed_hierarchy": self.seed_hierarchy,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        return cls(**data)


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    ts: str
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_dict(cls, data: dict) -> "SessionEvent":
        return cls(seq=data["seq"], ts=data["ts"], kind=data["kind"], payload=data["payload"])


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class EventLog:
    """Append-only JSONL file. Appends are a single flushed+fsynced write;
    a torn trailing line (crash mid-write) is dropped on read."""

    def __init__(self, path: Path):
        self.path = Path(path)

    @classmethod
    def create(cls, path: Path, header: dict) -> "EventLog":
        path = Path(path)
        if path.exists():
            raise SessionError(f"log already exists: {path}")
        path.parent.mkdir(parents=True, exist_ok=True)
        log = cls(path)
        log._write(json.dumps(header, sort_keys=True) + "\n")
        return log

    def _write(self, text: str) -> None:
        try:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(text)
                f.flush()
                os.fsync(f.fileno())
        except OSError as e:
            raise PersistFailure(str(e)) from e

    def append(self, events: list[SessionEvent]) -> None:
        self._write("".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in events))

    def read(self) -> tuple[dict, list[SessionEvent]]:
        text = self.path.read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise SessionError(f"empty log: {self.path}")
        header = json.loads(lines[0])
        events: list[SessionEvent] = []
        for i, line in enumerate(lines[1:], start=2):
            try:
                events.append(SessionEvent.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError):
                if i == len(lines):  # torn final line: drop it
                    break
                raise SessionError(f"corrupt log line {i} in {self.path}")
        return header, events


# -- pure state ----------------------------------------------------------------


def _records_to_payload(records: list[ImageRecord]) -> list[dict]:
    return [
        {
            "image_id": r.image_id,
            "uri": r.uri,
            "width": r.width,
            "height": r.height,
            "boxes": [
                {
                    "x": b.x,
                    "y": b.y,
                    "w": b.w,
                    "h": b.h,
                    "score": b.score,
                    "feature": list(b.feature.values),
                }
                for b in r.boxes
            ],
        }
        for r in records
    ]


def _records_from_payload(raw: list[dict]) -> list[ImageRecord]:
    return [
        ImageRecord(
            image_id=r["image_id"],
            uri=r["uri"],
            width=r["width"],
            height=r["height"],
            boxes=tuple(
                BoundingBox(
                    x=b["x"],
                    y=b["y"],
                    w=b["w"],
                    h=b["h"],
                    score=b["score"],
                    feature=FeatureVector.of(b["feature"]),
                )
                for b in r["boxes"]
            ),
        )
        for r in raw
    ]


@dataclass
class SessionState:
    """Everything foldable from the event log, and nothing else."""

    config: SessionConfig
    hierarchy: Hierarchy = field(default_factory=create_hierarchy)
    store: FeatureStore = field(default_factory=dict)
    queue: list[ObjectInstance] = field(default_factory=list)
    image_uris: dict[str, str] = field(default_factory=dict)
    position: int = 0
    applied_seq: int = 0
    manifest_loaded: bool = False
    seed_events_applied: int = 0
    pending: dict | None = None
    episode_steps: list[tuple[dict, dict]] = field(default_factory=list)  # (question, answer)
    pending_question: dict | None = None  # issued, not yet answered (same as pending)
    pending_creation: dict | None = None  # CategoryCreated seen, ObjectAssigned not yet
    transcripts: list[dict] = field(default_factory=list)
    aborted: list[dict] = field(default_factory=list)
    question_counts: dict[str, int] = field(
        default_factory=lambda: {GENUS: 0, DIFFERENTIA: 0, NEW_CATEGORY: 0}
    )
    categories_created: int = 0
    centroids: CentroidCache | None = None

    def done(self) -> bool:
        return self.position >= len(self.queue)

    def current_object(self) -> ObjectInstance:
        return self.queue[self.position]

    def centroid_fn(self):
        return self.centroids.centroid if self.centroids is not None else None

    def apply(self, event: SessionEvent) -> None:
        if event.seq != self.applied_seq + 1:
            raise SequenceGap(f"event seq {event.seq} after {self.applied_seq}")
        handler = {
            MANIFEST_LOADED: self._apply_manifest,
            QUESTION_ISSUED: self._apply_question,
            ANSWER_RECEIVED: self._apply_answer,
            CATEGORY_CREATED: self._apply_category_created,
            OBJECT_ASSIGNED: self._apply_assigned,
            EPISODE_ABORTED: self._apply_aborted,
        }.get(event.kind)
        if handler is None:
            raise SessionError(f"unknown event kind {event.kind!r}")
        handler(event.payload)
        self.applied_seq = event.seq

    def _apply_manifest(self, payload: dict) -> None:
        records = _records_from_payload(payload["records"])
        self.queue = explode(records)
        self.store = {inst.object_id: inst.feature for inst in self.queue}
        self.image_uris = {r.image_id: r.uri for r in records}
        self.centroids = CentroidCache(self.hierarchy, self.store)
        self.manifest_loaded = True

    def _apply_question(self, payload: dict) -> None:
        self.pending = dict(payload)
        self.question_counts[payload["kind"]] += 1

    def _apply_answer(self, payload: dict) -> None:
        if self.pending is None or payload["seq"] != self.pending["seq"]:
            raise ReplayMismatch("answer without a matching pending question")
        self.episode_steps.append((self.pending, dict(payload)))
        self.pending = None

    def _apply_category_created(self, payload: dict) -> None:
        new_id = self.hierarchy.add_category(
            payload["parent"],
            genus=payload["genus"],
            differentia=payload["differentia"],
            name=payload["name"],
        )
        if new_id != payload["category_id"]:
            raise ReplayMismatch(
                f"created category id {new_id} but log says {payload['category_id']}"
            )
        self.categories_created += 1
        if payload.get("origin") == "seed":
            self.seed_events_applied += 1
        elif payload.get("origin") == "episode":
            self.pending_creation = dict(payload)

    def _apply_assigned(self, payload: dict) -> None:
        object_id = payload["object_id"]
        self.hierarchy.assign_object(object_id, payload["category_id"])
        if self.centroids is not None:
            self.centroids.on_assigned(object_id, payload["category_id"])
        self.transcripts.append(
            {
                "object_id": object_id,
                "steps": [
                    {
                        "seq": q["seq"],
                        "kind": q["kind"],
                        "category": q["category_id"],
                        "verdict": a["verdict"],
                    }
                    for q, a in self.episode_steps
                ],
                "outcome": {
                    "type": payload["outcome"],
                    "category": payload["category_id"],
                    "path": payload["path"],
                },
            }
        )
        self.episode_steps = []
        self.pending_creation = None
        self.position += 1

    def _apply_aborted(self, payload: dict) -> None:
        self.aborted.append(dict(payload))
        self.episode_steps = []
        self.pending = None
        self.pending_creation = None
        self.position += 1

    # -- snapshots -------------------------------------------------------------

    def stats(self) -> dict:
        assigned = len(self.transcripts)
        return {
            "objects": {
                "total": len(self.queue),
                "assigned": assigned,
                "aborted": len(self.aborted),
                "pending": len(self.queue) - assigned - len(self.aborted),
            },
            "questions": {
                "genus": self.question_counts[GENUS],
                "differentia": self.question_counts[DIFFERENTIA],
                "new_category": self.question_counts[NEW_CATEGORY],
                "total": self.question_counts[GENUS] + self.question_counts[DIFFERENTIA],
            },
            "categories": {
                "count": len(self.hierarchy.nodes) - 1,
                "created": self.categories_created,
            },
            "done": self.done(),
        }


# -- the command layer -----------------------------------------------------------


def _question_payload(q: Question) -> dict:
    return {
        "object_id": q.object_id,
        "seq": q.seq,
        "kind": q.kind,
        "category_id": q.category_id,
        "prompt": q.prompt,
        "category_path": q.category_path,
        "category_name": q.category_name,
        "genus": q.genus,
        "differentia": q.differentia,
    }


def _question_from_payload(p: dict) -> Question:
    return Question(
        kind=p["kind"],
        object_id=p["object_id"],
        category_id=p["category_id"],
        seq=p["seq"],
        prompt=p["prompt"],
        category_path=p["category_path"],
        category_name=p["category_name"],
        genus=p["genus"],
        differentia=p["differentia"],
    )


def _answer_from_payload(p: dict) -> Answer:
    payload = p.get("new_category")
    return Answer(
        seq=p["seq"],
        verdict=p["verdict"],
        new_category=NewCategoryPayload(**payload) if payload else None,
    )


class Session:
    """One annotator's labeling run over one manifest."""

    def __init__(self, log: EventLog, state: SessionState):
        self.log = log
        self.state = state
        self._last_ack: dict | None = None

    # -- lifecycle -------------------------------------------------------------

    @classmethod
    def create(cls, config: SessionConfig, session_dir: str | Path) -> "Session":
        session_dir = Path(session_dir)
        header = {
            "version": LOG_VERSION,
            "type": "session-log",
            "session_id": config.session_id,
            "config": config.to_dict(),
        }
        log = EventLog.create(session_dir / "events.jsonl", header)
        session = cls(log, SessionState(config=config))
        session._complete_initialization()
        session._advance()
        return session

    @classmethod
    def open(cls, session_dir: str | Path) -> "Session":
        log = EventLog(Path(session_dir) / "events.jsonl")
        header, events = log.read()
        config = SessionConfig.from_dict(header["config"])
        state = SessionState(config=config)
        for event in events:
            state.apply(event)
        session = cls(log, state)
        # finish whatever a crash interrupted: initialization, an episode
        # outcome, or the next question
        session._complete_initialization()
        session._advance()
        return session

    def _complete_initialization(self) -> None:
        """Emit any initialization events the log does not hold yet.

        Idempotent: a session created moments ago and a session reopened
        after a crash at any point both end up fully initialized. Seeding
        follows reference path order, so a partially seeded tree determines
        the remainder.
        """
        config = self.state.config
        if config.manifest and not self.state.manifest_loaded:
            records, store = load_manifest(config.manifest)
            if any(len(f) != config.feature_dim for f in store.values()):
                raise SessionError("manifest feature_dim differs from session config")
            sha = hashlib.sha256(Path(config.manifest).read_bytes()).hexdigest()
            self._append(
                MANIFEST_LOADED,
                {
                    "path": str(config.manifest),
                    "sha256": sha,
                    "feature_dim": config.feature_dim,
                    "records": _records_to_payload(records),
                },
            )
        if config.reference and config.seed_hierarchy:
            reference, _ = load_reference_bundle(config.reference)
            order = sorted(
                (n for n in reference.nodes.values() if not n.is_root),
                key=lambda n: reference.path_label(n.id),
            )
            done = self.state.seed_events_applied
            if done > len(order):
                raise ReplayMismatch("log holds more seed events than the reference")
            for node in order[done:]:
                # the seeded prefix carries the reference's own path labels
                parent = self.state.hierarchy.node_at(reference.path_label(node.parent))
                self._append(
                    CATEGORY_CREATED,
                    {
                        "category_id": self.state.hierarchy.next_id,
                        "parent": parent,
                        "name": node.name,
                        "genus": node.genus,
                        "differentia": node.differentia,
                        "origin": "seed",
                        "object_id": None,
                    },
                )

    # -- event plumbing -----------------------------------------------------------

    def append_and_apply(self, event: SessionEvent) -> None:
        """Gapless append: persist first, then fold into state."""
        if event.seq != self.state.applied_seq + 1:
            raise SequenceGap(f"event seq {event.seq} after {self.state.applied_seq}")
        self.log.append([event])
        self.state.apply(event)

    def _append(self, kind: str, payload: dict) -> None:
        self.append_and_apply(
            SessionEvent(seq=self.state.applied_seq + 1, ts=_now(), kind=kind, payload=payload)
        )

    def _append_batch(self, items: list[tuple[str, dict]]) -> None:
        """One durable write for events that must land together."""
        events = []
        seq = self.state.applied_seq
        ts = _now()
        for kind, payload in items:
            seq += 1
            events.append(SessionEvent(seq=seq, ts=ts, kind=kind, payload=payload))
        self.log.append(events)
        for event in events:
            self.state.apply(event)

    # -- engine stepping ------------------------------------------------------------

    def _resume_episode(self):
        """Re-drive the current object's episode from its recorded answers."""
        state = self.state
        obj = state.current_object()
        gen = episode_gen(obj, state.hierarchy, state.store, state.centroid_fn())
        answers = [_answer_from_payload(a) for _, a in state.episode_steps]
        try:
            question = next(gen)
            for answer in answers:
                if answer.seq != question.seq:
                    raise ReplayMismatch(
                        f"recorded answer seq {answer.seq} vs question seq {question.seq}"
                    )
                question = gen.send(answer)
            return "question", question, None
        except StopIteration as stop:
            return "plan", None, stop.value

    def _finalize(self, plan: EpisodePlan) -> None:
        state = self.state
        obj = state.current_object()
        if plan.creates:
            h = state.hierarchy
            new_id = h.next_id
            parent_path = h.path_label(plan.create_under)
            new_path = parent_path.child(len(h.node(plan.create_under).children) + 1)
            self._append_batch(
                [
                    (
                        CATEGORY_CREATED,
                        {
                            "category_id": new_id,
                            "parent": plan.create_under,
                            "name": plan.payload.name,
                            "genus": plan.payload.genus,
                            "differentia": plan.payload.differentia,
                            "origin": "episode",
                            "object_id": obj.object_id,
                        },
                    ),
                    self._assignment_event(obj.object_id, new_id, "created", str(new_path)),
                ]
            )
        else:
            path = str(state.hierarchy.path_label(plan.assign_to))
            self._append_batch(
                [self._assignment_event(obj.object_id, plan.assign_to, "assigned", path)]
            )

    def _assignment_event(
        self, object_id: str, category: CategoryId, outcome: str, path: str
    ):
        return (
            OBJECT_ASSIGNED,
            {
                "object_id": object_id,
                "category_id": category,
                "outcome": outcome,
                "path": path,
            },
        )

    def _advance(self) -> None:
        """Emit events until a question is pending or the queue is done."""
        state = self.state
        while not state.done() and state.pending is None:
            if state.pending_creation is not None:
                # crash recovery: the creation landed, the assignment did not
                created = state.pending_creation
                path = str(state.hierarchy.path_label(created["category_id"]))
                self._append_batch(
                    [
                        self._assignment_event(
                            created["object_id"], created["category_id"], "created", path
                        )
                    ]
                )
                continue
            status, question, plan = self._resume_episode()
            if status == "question":
                self._append(QUESTION_ISSUED, _question_payload(question))
            else:
                self._finalize(plan)

    # -- answering --------------------------------------------------------------------

    def pending_question(self) -> dict | None:
        return dict(self.state.pending) if self.state.pending is not None else None

    def submit_answer(
        self,
        object_id: str,
        seq: int,
        verdict: bool | None = None,
        new_category: dict | None = None,
    ) -> dict:
        """Answer the pending question; idempotent on (object_id, seq)."""
        state = self.state
        last = self._last_ack
        if last is not None and (object_id, seq) == (last["object_id"], last["seq"]):
            return dict(last)
        if state.pending is None:
            raise StaleQuestion("no question is pending", None)
        pending = state.pending
        if (object_id, seq) != (pending["object_id"], pending["seq"]):
            raise StaleQuestion(
                f"answer targets {(object_id, seq)} but pending is "
                f"{(pending['object_id'], pending['seq'])}",
                dict(pending),
            )
        payload = self._validated_answer(pending, verdict, new_category)
        self._append(ANSWER_RECEIVED, payload)
        self._advance()
        ack = {
            "object_id": object_id,
            "seq": seq,
            "accepted": True,
            "done": state.done(),
        }
        self._last_ack = ack
        return dict(ack)

    def _validated_answer(
        self, pending: dict, verdict: bool | None, new_category: dict | None
    ) -> dict:
        if pending["kind"] in (GENUS, DIFFERENTIA):
            if verdict is None or new_category is not None:
                raise BadAnswer("genus/differentia answers carry a bare verdict")
            return {
                "object_id": pending["object_id"],
                "seq": pending["seq"],
                "verdict": bool(verdict),
                "new_category": None,
            }
        # new-category decision
        anchor = self.state.hierarchy.node(pending["category_id"])
        if new_category is None:
            if anchor.is_root:
                raise BadAnswer(
                    "the top layer matched nothing; a new category description is required"
                )
            return {
                "object_id": pending["object_id"],
                "seq": pending["seq"],
                "verdict": False,
                "new_category": None,
            }
        genus = str(new_category.get("genus", ""))
        differentia = str(new_category.get("differentia", ""))
        name = new_category.get("name")
        if not genus.strip():
            raise BadAnswer("a new category needs a non-empty genus")
        if anchor.children and not differentia.strip():
            raise BadAnswer("siblings exist; a new category needs a non-empty differentia")
        return {
            "object_id": pending["object_id"],
            "seq": pending["seq"],
            "verdict": True,
            "new_category": {"name": name, "genus": genus, "differentia": differentia},
        }

    # -- oracles ------------------------------------------------------------------------

    def run_with_oracle(self, oracle, max_objects: int | None = None) -> dict:
        """Drive the session until done (or the oracle gives out per episode)."""
        answered_objects = 0
        current = None
        while not self.state.done():
            pending = self.state.pending
            if pending is None:
                break
            if pending["object_id"] != current:
                current = pending["object_id"]
                answered_objects += 1
                if max_objects is not None and answered_objects > max_objects:
                    break
            question = _question_from_payload(pending)
            try:
                answer = ask_oracle(oracle, question, self.state.hierarchy)
            except OracleUnavailable as e:
                self._append(
                    EPISODE_ABORTED, {"object_id": pending["object_id"], "reason": str(e)}
                )
                self._advance()
                current = None
                continue
            self.submit_answer(
                object_id=question.object_id,
                seq=question.seq,
                verdict=None if question.kind == NEW_CATEGORY else answer.verdict,
                new_category=(
                    {
                        "name": answer.new_category.name,
                        "genus": answer.new_category.genus,
                        "differentia": answer.new_category.differentia,
                    }
                    if answer.new_category is not None
                    else None
                ),
            )
        return self.state.stats()

    def build_simulated_oracle(self) -> SimulatedOracle:
        config = self.state.config
        if config.oracle_mode != "simulated" or not config.reference:
            raise SessionError("session is not configured for simulation")
        reference, ground_truth = load_reference_bundle(config.reference)
        return SimulatedOracle(
            reference, ground_truth, flip_p=config.flip_p, seed=config.seed
        )

    # -- views ---------------------------------------------------------------------------

    def stats(self) -> dict:
        return self.state.stats()

    def next_view(self) -> dict:
        """Wire shape of GET next: the pending question plus display context."""
        state = self.state
        if state.pending is None:
            return {"done": state.done(), "question": None}
        pending = dict(state.pending)
        obj = state.current_object()
        node = state.hierarchy.node(pending["category_id"])
        exemplars = []
        for member in reversed(node.members):
            if len(exemplars) >= 6:
                break
            exemplars.append(self._object_view(member))
        return {
            "done": False,
            "question": pending,
            "object": self._object_view(obj.object_id),
            "candidate": {
                "category_id": node.id,
                "name": node.name,
                "path": pending["category_path"],
                "genus": node.genus,
                "differentia": node.differentia,
                "has_children": bool(node.children),
                "is_root": node.is_root,
                "exemplars": exemplars,
            },
        }

    def _object_view(self, object_id: str) -> dict:
        image_id = object_id.rsplit("#", 1)[0]
        inst = next((o for o in self.state.queue if o.object_id == object_id), None)
        view = {"object_id": object_id, "uri": self.state.image_uris.get(image_id)}
        if inst is not None:
            view["crop"] = {"x": inst.crop.x, "y": inst.crop.y, "side": inst.crop.side}
        return view

    def state_view(self) -> dict:
        state = self.state
        return {
            "session_id": state.config.session_id,
            "hierarchy": state.hierarchy.to_dict(),
            "stats": state.stats(),
        }
