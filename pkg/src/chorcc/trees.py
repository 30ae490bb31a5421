"""Rooted labelled trees: the single data model for state, messages, and keys.

A tree is immutable and hashable. Internal nodes hold children keyed by
label; only leaves may carry a value (int, str, bool, or a location).
Hashability matters: correlation keys are trees and index queue maps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Loc:
    """A location constant, distinct from an ordinary string value."""

    name: str

    def __repr__(self) -> str:
        return f"Loc({self.name!r})"


Value = int | str | bool | Loc


@dataclass(frozen=True)
class Path:
    """A dot-separated descent through tree labels; () is the root."""

    segments: tuple[str, ...] = ()

    @staticmethod
    def of(text: str) -> "Path":
        if text == "":
            return Path()
        return Path(tuple(text.split(".")))

    def child(self, label: str) -> "Path":
        return Path(self.segments + (label,))

    def join(self, other: "Path") -> "Path":
        return Path(self.segments + other.segments)

    def __str__(self) -> str:
        return ".".join(self.segments)

    def __bool__(self) -> bool:
        return bool(self.segments)


@dataclass(frozen=True)
class Tree:
    value: Value | None = None
    children: tuple[tuple[str, "Tree"], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.value is not None and self.children:
            raise ValueError("only leaves carry values")
        labels = [k for k, _ in self.children]
        if labels != sorted(labels):
            object.__setattr__(
                self, "children", tuple(sorted(self.children, key=lambda kv: kv[0]))
            )
            labels.sort()
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate child label")
        if isinstance(self.value, bool):
            pass  # bool is also int; keep it as bool
        elif isinstance(self.value, (int, str, Loc)) or self.value is None:
            pass
        else:
            raise TypeError(f"unsupported leaf value: {self.value!r}")

    def child(self, label: str) -> "Tree | None":
        for k, sub in self.children:
            if k == label:
                return sub
        return None

    def labels(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.children)

    def is_empty(self) -> bool:
        return self.value is None and not self.children


EMPTY = Tree()


def leaf(value: Value) -> Tree:
    return Tree(value=value)


def node(entries: dict[str, Tree]) -> Tree:
    return Tree(children=tuple(sorted(entries.items())))


def tree_of(obj) -> Tree:
    """Build a tree from nested dicts and scalars (test/fixture convenience)."""
    if isinstance(obj, Tree):
        return obj
    if isinstance(obj, dict):
        return node({k: tree_of(v) for k, v in obj.items()})
    return leaf(obj)


def resolve(tree: Tree, path: Path) -> Tree | None:
    """Subtree at path, or None when any segment is missing."""
    cur: Tree | None = tree
    for seg in path.segments:
        if cur is None:
            return None
        cur = cur.child(seg)
    return cur


def replace(tree: Tree, path: Path, sub: Tree) -> Tree:
    """Persistent update: the subtree at path becomes sub.

    Missing intermediate nodes are created; writing below a leaf discards
    the leaf's value (a node cannot both carry a value and have children).
    """
    if not path.segments:
        return sub
    head, rest = path.segments[0], Path(path.segments[1:])
    entries = dict(tree.children)
    base = entries.get(head, EMPTY)
    entries[head] = replace(base, rest, sub)
    return node(entries)


# Canonical serialization: leaves as scalars, nodes as objects keyed by
# label, locations as "loc:"-prefixed strings.  Plain strings that would
# collide with a prefix are escaped with "str:".  Keys sort; output is
# bit-exact for equal trees.

def to_obj(tree: Tree):
    if tree.children or tree.value is None:
        return {k: to_obj(v) for k, v in tree.children}
    v = tree.value
    if isinstance(v, Loc):
        return "loc:" + v.name
    if isinstance(v, str) and (v.startswith("loc:") or v.startswith("str:")):
        return "str:" + v
    return v


def from_obj(obj) -> Tree:
    if isinstance(obj, dict):
        return node({k: from_obj(v) for k, v in obj.items()})
    if isinstance(obj, str):
        if obj.startswith("loc:"):
            return leaf(Loc(obj[4:]))
        if obj.startswith("str:"):
            return leaf(obj[4:])
        return leaf(obj)
    if isinstance(obj, bool) or isinstance(obj, int):
        return leaf(obj)
    raise ValueError(f"not a tree encoding: {obj!r}")


def canon_text(tree: Tree) -> str:
    return json.dumps(to_obj(tree), sort_keys=True, separators=(",", ":"))


def parse_canon(text: str) -> Tree:
    return from_obj(json.loads(text))


def surface_text(tree: Tree) -> str:
    """Source-syntax rendering: {a: 1, b: "s", c: @lC}; leaves bare."""
    if tree.value is not None:
        v = tree.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, Loc):
            return "@" + v.name
        return json.dumps(v)
    inner = ", ".join(f"{k}: {surface_text(v)}" for k, v in tree.children)
    return "{" + inner + "}"
