"""Rooted visual-subsumption hierarchy.

Categories are organized as an append-only tree. Every node carries a
free-text genus descriptor (visual properties shared by everything in its
subtree) and a differentia descriptor (what separates it from its
siblings). The tree starts from a single virtual root that holds no
members and no descriptors; exported labels are underscore-joined child
ordinals counted from the root ("1", "1_2", "1_2_1", ...).

The machine never interprets descriptor text; it only stores, renders and
round-trips it. Assignment of objects to categories is global and
single-shot: an object id may appear in exactly one node's member list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class HierarchyError(Exception):
    """Base for all hierarchy mutation errors."""


class UnknownCategory(HierarchyError):
    pass


class UnknownParent(HierarchyError):
    pass


class EmptyGenus(HierarchyError):
    pass


class EmptyDifferentia(HierarchyError):
    pass


class AlreadyAssigned(HierarchyError):
    pass


class RootAssignment(HierarchyError):
    pass


CategoryId = int

ROOT_ID: CategoryId = 0


@dataclass(frozen=True, order=True)
class LabelPath:
    """Child-ordinal path from the root, e.g. segments (1, 2) renders "1_2".

    The root itself has the empty path, rendered as "".
    """

    segments: tuple[int, ...] = ()

    def __str__(self) -> str:
        return "_".join(str(s) for s in self.segments)

    @property
    def depth(self) -> int:
        return len(self.segments)

    def child(self, ordinal: int) -> "LabelPath":
        return LabelPath(self.segments + (ordinal,))

    def is_prefix_of(self, other: "LabelPath") -> bool:
        """True when self lies on the root-to-other path (equality included)."""
        return self.segments == other.segments[: len(self.segments)]

    @classmethod
    def parse(cls, text: str) -> "LabelPath":
        if text == "":
            return cls(())
        segments = tuple(int(part) for part in text.split("_"))
        if any(s < 1 for s in segments):
            raise ValueError(f"label path segments must be positive: {text!r}")
        return cls(segments)


@dataclass
class Category:
    """One node: descriptors, ordered children, ordered member object ids."""

    id: CategoryId
    parent: CategoryId | None
    name: str | None
    genus: str
    differentia: str
    children: list[CategoryId] = field(default_factory=list)
    members: list[str] = field(default_factory=list)

    @property
    def is_root(self) -> bool:
        return self.parent is None


@dataclass(frozen=True)
class Violation:
    """A broken invariant found by validate(); data, not an exception."""

    rule: str
    node: CategoryId | None = None
    detail: str = ""


class Hierarchy:
    """Append-only category tree with globally unique member assignment."""

    def __init__(self) -> None:
        root = Category(id=ROOT_ID, parent=None, name=None, genus="", differentia="")
        self.nodes: dict[CategoryId, Category] = {ROOT_ID: root}
        self.root: CategoryId = ROOT_ID
        self.next_id: CategoryId = ROOT_ID + 1
        self._member_of: dict[str, CategoryId] = {}

    # -- queries ---------------------------------------------------------

    def node(self, cat: CategoryId) -> Category:
        try:
            return self.nodes[cat]
        except KeyError:
            raise UnknownCategory(f"no category with id {cat}") from None

    def children(self, cat: CategoryId) -> list[CategoryId]:
        return list(self.node(cat).children)

    def path_label(self, cat: CategoryId) -> LabelPath:
        """Ordinal path from root; stable under serialization round-trips."""
        node = self.node(cat)
        segments: list[int] = []
        hops = 0
        while node.parent is not None:
            parent = self.node(node.parent)
            try:
                ordinal = parent.children.index(node.id) + 1
            except ValueError:
                raise HierarchyError(
                    f"node {node.id} missing from children of {parent.id}"
                ) from None
            segments.append(ordinal)
            node = parent
            hops += 1
            if hops > len(self.nodes):
                raise HierarchyError(f"parent chain from {cat} does not reach root")
        return LabelPath(tuple(reversed(segments)))

    def node_at(self, path: LabelPath) -> CategoryId:
        """Resolve an ordinal path to a category id."""
        cat = self.root
        for ordinal in path.segments:
            kids = self.node(cat).children
            if not 1 <= ordinal <= len(kids):
                raise UnknownCategory(f"no node at path {path}")
            cat = kids[ordinal - 1]
        return cat

    def subtree(self, cat: CategoryId) -> list[CategoryId]:
        """Ids of cat and all its descendants, preorder."""
        out: list[CategoryId] = []
        stack = [cat]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self.node(cur).children))
        return out

    def member_category(self, object_id: str) -> CategoryId | None:
        return self._member_of.get(object_id)

    def assigned_objects(self) -> dict[str, CategoryId]:
        return dict(self._member_of)

    # -- mutations ---------------------------------------------------------

    def add_category(
        self,
        parent: CategoryId,
        genus: str,
        differentia: str,
        name: str | None = None,
    ) -> CategoryId:
        """Append a new category as the last child of parent.

        Genus must be non-empty for any non-root node; differentia must be
        non-empty as soon as the new node has at least one sibling.
        """
        if parent not in self.nodes:
            raise UnknownParent(f"no category with id {parent}")
        if not genus.strip():
            raise EmptyGenus("a new category needs a genus description")
        siblings = self.nodes[parent].children
        if siblings and not differentia.strip():
            raise EmptyDifferentia(
                f"category under {parent} has {len(siblings)} sibling(s); "
                "a differentia description is required"
            )
        new_id = self.next_id
        self.next_id += 1
        self.nodes[new_id] = Category(
            id=new_id, parent=parent, name=name, genus=genus, differentia=differentia
        )
        self.nodes[parent].children.append(new_id)
        return new_id

    def assign_object(self, object_id: str, cat: CategoryId) -> None:
        """Record object membership; each object id can be assigned once."""
        if cat not in self.nodes:
            raise UnknownCategory(f"no category with id {cat}")
        if cat == self.root:
            raise RootAssignment("the virtual root cannot hold members")
        if object_id in self._member_of:
            raise AlreadyAssigned(
                f"object {object_id!r} already in category {self._member_of[object_id]}"
            )
        self.nodes[cat].members.append(object_id)
        self._member_of[object_id] = cat

    # -- validation --------------------------------------------------------

    def validate(self) -> list[Violation]:
        """Check every structural invariant; returns violations as data."""
        violations: list[Violation] = []

        roots = [n.id for n in self.nodes.values() if n.parent is None]
        if len(roots) != 1 or self.root not in roots:
            violations.append(
                Violation("RootCount", detail=f"parentless nodes: {roots}, root={self.root}")
            )
        root = self.nodes.get(self.root)
        if root is not None:
            if root.members:
                violations.append(Violation("RootHasMembers", node=root.id))
            if root.genus or root.differentia:
                violations.append(Violation("RootHasDescriptors", node=root.id))

        for node in self.nodes.values():
            for child_id in node.children:
                child = self.nodes.get(child_id)
                if child is None:
                    violations.append(
                        Violation("UnknownChild", node=node.id, detail=f"child {child_id}")
                    )
                elif child.parent != node.id:
                    violations.append(
                        Violation(
                            "BrokenParentLink",
                            node=child_id,
                            detail=f"listed under {node.id} but parent={child.parent}",
                        )
                    )
            if node.parent is not None:
                parent = self.nodes.get(node.parent)
                if parent is None:
                    violations.append(
                        Violation("UnknownParentRef", node=node.id, detail=f"parent {node.parent}")
                    )
                elif node.id not in parent.children:
                    violations.append(
                        Violation(
                            "BrokenParentLink",
                            node=node.id,
                            detail=f"parent {node.parent} does not list it as a child",
                        )
                    )
                if not node.genus.strip():
                    violations.append(Violation("EmptyGenus", node=node.id))
                if parent is not None and len(parent.children) > 1 and not node.differentia.strip():
                    violations.append(Violation("EmptyDifferentia", node=node.id))

        # reachability / cycles: walk parent chains
        for node in self.nodes.values():
            seen: set[CategoryId] = set()
            cur: Category | None = node
            while cur is not None and cur.parent is not None:
                if cur.id in seen:
                    violations.append(Violation("CycleDetected", node=node.id))
                    break
                seen.add(cur.id)
                cur = self.nodes.get(cur.parent)

        owners: dict[str, CategoryId] = {}
        for node in self.nodes.values():
            for object_id in node.members:
                if object_id in owners:
                    violations.append(
                        Violation(
                            "DuplicateMember",
                            node=node.id,
                            detail=f"object {object_id!r} also in {owners[object_id]}",
                        )
                    )
                else:
                    owners[object_id] = node.id

        return violations

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "nodes": [
                {
                    "id": n.id,
                    "parent": n.parent,
                    "name": n.name,
                    "genus": n.genus,
                    "differentia": n.differentia,
                    "children": list(n.children),
                    "members": list(n.members),
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
        }

    def dumps(self) -> str:
        """Canonical JSON: sorted keys, 2-space indent, LF, trailing newline."""
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Hierarchy":
        """Rebuild structure as stored; semantic problems are left to validate()."""
        h = cls.__new__(cls)
        h.nodes = {}
        h.root = data["root"]
        h._member_of = {}
        max_id = h.root
        for raw in data["nodes"]:
            node = Category(
                id=raw["id"],
                parent=raw["parent"],
                name=raw["name"],
                genus=raw["genus"],
                differentia=raw["differentia"],
                children=list(raw["children"]),
                members=list(raw["members"]),
            )
            h.nodes[node.id] = node
            max_id = max(max_id, node.id)
            for object_id in node.members:
                h._member_of.setdefault(object_id, node.id)
        h.next_id = max_id + 1
        return h

    @classmethod
    def loads(cls, text: str) -> "Hierarchy":
        return cls.from_dict(json.loads(text))


def create_hierarchy() -> Hierarchy:
    """Fresh tree holding exactly the virtual root and no members."""
    return Hierarchy()
