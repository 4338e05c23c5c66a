"""Symbol layout trees: the appearance-level formula representation.

A symbol layout tree (SLT) is a rooted tree whose nodes are typed symbols
(variables, numbers, fractions, matrices, ...) and whose edges capture the
spatial relation between a symbol and its neighbours.  Each node carries at
most one outgoing edge per relation, so a node has at most seven children.

Edge labels and their one-character serializations:

    n  next       adjacent object to the right on the same line
    w  within     radicand, or first cell of a tabular structure
    e  element    next cell of a tabular structure, row-major
    a  above      superscript, over-symbol, numerator, radical index
    b  below      subscript, under-symbol, denominator
    A  pre-above  prescripted superscript
    B  pre-below  prescripted subscript

Long ``next`` chains make these trees deep, so all traversals here are
iterative rather than recursive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

EDGE_LABELS = ("n", "w", "e", "a", "b", "A", "B")
_EDGE_RANK = {label: i for i, label in enumerate(EDGE_LABELS)}

#: Reserved terminal used as the descendant of end-of-line tuples.  It is not
#: a symbol and never appears as a node label.
EOL_SYMBOL = "!0"

# Symbol type kinds, derivable from the label alone.
VARIABLE = "variable"
NUMBER = "number"
TEXT = "text"
FRACTION = "fraction"
RADICAL = "radical"
MATRIX = "matrix"
WHITESPACE = "whitespace"
WILDCARD = "wildcard"
OPERATOR = "operator"

_PREFIX_KINDS = {
    "V": VARIABLE,
    "N": NUMBER,
    "T": TEXT,
    "F": FRACTION,
    "R": RADICAL,
    "W": WHITESPACE,
}

_MATRIX_LABEL = re.compile(r"^M!(.*?)(\d+)x(\d+)$")


@dataclass(frozen=True)
class SymbolType:
    """Type of an SLT node; matrices carry their dimensions but not fences."""

    kind: str
    rows: int | None = None
    cols: int | None = None


def node_type(label: str) -> SymbolType:
    """Classify a symbol label.

    Typed symbols look like ``V!x``; matrix labels are ``M!`` plus optional
    fence characters and an ``RxC`` shape; labels starting with ``?`` are
    wildcards; anything else is an operator or separator.
    """
    if not label or label == EOL_SYMBOL:
        raise ValueError(f"not a symbol label: {label!r}")
    if label.startswith("?"):
        return SymbolType(WILDCARD)
    if len(label) >= 2 and label[1] == "!":
        prefix = label[0]
        if prefix == "M":
            match = _MATRIX_LABEL.match(label)
            if not match:
                raise ValueError(f"malformed matrix label: {label!r}")
            return SymbolType(MATRIX, int(match.group(2)), int(match.group(3)))
        kind = _PREFIX_KINDS.get(prefix)
        if kind is not None:
            return SymbolType(kind)
    return SymbolType(OPERATOR)


# Coarse unification classes, shared with the re-ranker.
UNIFY_VARIABLE = 0
UNIFY_NUMBER = 1
UNIFY_WILDCARD = 2
UNIFY_LITERAL = 3


def unification_class(label: str) -> int:
    """Bucket a label for node unification (variable/number/wildcard/other)."""
    if label.startswith("?"):
        return UNIFY_WILDCARD
    if len(label) >= 2 and label[1] == "!":
        if label[0] == "V":
            return UNIFY_VARIABLE
        if label[0] == "N":
            return UNIFY_NUMBER
    return UNIFY_LITERAL


#: Nested builder form: a ``(label, {edge: nested, ...})`` pair.
Nested = tuple[str, dict]


class Slt:
    """Immutable symbol layout tree with pre-order node ids.

    Node 0 is the root; children are stored per node as an edge-label ->
    child-id mapping whose iteration order follows ``EDGE_LABELS``.  Because
    ids are assigned in pre-order with children visited in that fixed edge
    order, two trees are equal exactly when they are isomorphic with
    identical labels.
    """

    __slots__ = ("labels", "children")

    def __init__(self, labels: tuple[str, ...], children: tuple[dict[str, int], ...]):
        self.labels = labels
        self.children = children

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def root(self) -> int:
        return 0

    @classmethod
    def from_nested(cls, nested: Nested) -> "Slt":
        """Build a tree from nested ``(label, {edge: nested})`` tuples."""
        labels: list[str] = []
        children: list[dict[str, int]] = []
        stack: list[tuple[Nested, int]] = [(nested, -1)]
        edge_of: list[str] = [""]
        while stack:
            (label, kids), parent = stack.pop()
            edge = edge_of.pop()
            if not label or label == EOL_SYMBOL:
                raise ValueError(f"invalid node label: {label!r}")
            node_id = len(labels)
            labels.append(label)
            children.append({})
            if parent >= 0:
                if edge in children[parent]:
                    raise ValueError(f"duplicate edge {edge!r}")
                children[parent][edge] = node_id
            # Reversed push so children are numbered in canonical edge order.
            for kid_edge in sorted(kids, key=_edge_rank, reverse=True):
                stack.append((kids[kid_edge], node_id))
                edge_of.append(kid_edge)
        return cls(tuple(labels), tuple(children))

    def to_nested(self) -> Nested:
        nested: list[Nested] = [(label, {}) for label in self.labels]
        for parent, kids in enumerate(self.children):
            for edge, child in kids.items():
                nested[parent][1][edge] = nested[child]
        return nested[0]

    def parents(self) -> list[tuple[int, str]]:
        """Per node: ``(parent id, edge label)``; the root maps to ``(-1, "")``."""
        out = [(-1, "")] * self.size
        for parent, kids in enumerate(self.children):
            for edge, child in kids.items():
                out[child] = (parent, edge)
        return out

    def iter_edges(self) -> Iterator[tuple[int, int, str]]:
        for parent, kids in enumerate(self.children):
            for edge, child in kids.items():
                yield parent, child, edge

    def canonical(self) -> str:
        """Serialize deterministically; equal strings iff equal trees.

        Pre-order, children in fixed edge order, child subtrees prefixed by
        their edge character: ``a+b`` becomes ``[V!a[n:+[n:V!b]]]``.
        """
        parts: list[str] = []
        stack: list[object] = [(0, "")]
        while stack:
            item = stack.pop()
            if item is None:
                parts.append("]")
                continue
            node_id, prefix = item
            parts.append("[")
            parts.append(prefix)
            parts.append(_escape(self.labels[node_id]))
            stack.append(None)
            kids = self.children[node_id]
            for edge in reversed(kids):
                stack.append((kids[edge], edge + ":"))
        return "".join(parts)

    @classmethod
    def from_canonical(cls, text: str) -> "Slt":
        """Parse the output of :meth:`canonical` back into a tree."""
        labels: list[str] = []
        children: list[dict[str, int]] = []
        open_nodes: list[int] = []
        pos = 0
        length = len(text)

        def fail(msg: str) -> ValueError:
            return ValueError(f"bad canonical string at offset {pos}: {msg}")

        while pos < length:
            char = text[pos]
            if char == "[":
                pos += 1
                edge = ""
                if open_nodes:
                    if pos + 1 >= length or text[pos + 1] != ":":
                        raise fail("expected edge prefix")
                    edge = text[pos]
                    if edge not in _EDGE_RANK:
                        raise fail(f"unknown edge label {edge!r}")
                    pos += 2
                elif labels:
                    raise fail("multiple roots")
                label_chars: list[str] = []
                while pos < length and text[pos] not in "[]":
                    if text[pos] == "\\":
                        pos += 1
                        if pos >= length:
                            raise fail("dangling escape")
                    label_chars.append(text[pos])
                    pos += 1
                if not label_chars:
                    raise fail("empty label")
                label = "".join(label_chars)
                if label == EOL_SYMBOL:
                    raise fail("reserved label")
                node_id = len(labels)
                labels.append(label)
                children.append({})
                if open_nodes:
                    parent = children[open_nodes[-1]]
                    if edge in parent:
                        raise fail(f"duplicate edge {edge!r}")
                    if parent and _EDGE_RANK[edge] <= max(_EDGE_RANK[e] for e in parent):
                        raise fail("edges out of canonical order")
                    parent[edge] = node_id
                open_nodes.append(node_id)
            elif char == "]":
                if not open_nodes:
                    raise fail("unbalanced ']'")
                open_nodes.pop()
                pos += 1
            else:
                raise fail(f"unexpected character {char!r}")
        if open_nodes or not labels:
            raise ValueError("bad canonical string: unterminated tree")
        return cls(tuple(labels), tuple(children))

    def validate(self) -> None:
        """Check the structural invariants; raises ``ValueError`` on violation."""
        seen: set[int] = set()
        stack = [0]
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                raise ValueError("node reachable twice")
            seen.add(node_id)
            node_type(self.labels[node_id])
            kids = self.children[node_id]
            for edge in kids:
                if edge not in _EDGE_RANK:
                    raise ValueError(f"unknown edge label {edge!r}")
            stack.extend(kids.values())
        if len(seen) != self.size:
            raise ValueError("unreachable nodes present")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Slt):
            return NotImplemented
        return self.labels == other.labels and self.children == other.children

    def __repr__(self) -> str:
        return f"Slt({self.canonical()!r})"


def _edge_rank(edge: str) -> int:
    try:
        return _EDGE_RANK[edge]
    except KeyError:
        raise ValueError(f"unknown edge label {edge!r}") from None


def _escape(label: str) -> str:
    if "[" in label or "]" in label or "\\" in label:
        return label.replace("\\", "\\\\").replace("[", "\\[").replace("]", "\\]")
    return label
