"""Symbol-pair tuple extraction: the indexing unit for formula retrieval.

Each tuple records an ``(ancestor symbol, descendant symbol, edge path)``
triple taken from a root-to-leaf path of a symbol layout tree, restricted to
pairs at most ``window`` edges apart.  End-of-line tuples ``(symbol, !0, n)``
optionally mark every node without a ``next`` successor, which helps retrieve
isolated symbols and very small expressions.
"""

from __future__ import annotations

from collections import Counter

from .slt import EOL_SYMBOL, Slt, unification_class, UNIFY_WILDCARD

#: ``(ancestor label, descendant label or "!0", edge-path string)``
SymbolTuple = tuple[str, str, str]

TupleBag = Counter  # SymbolTuple -> positive count

# Query tuple classes.
CONCRETE = "concrete"
WILDCARD_ANCESTOR = "wildcard-ancestor"
WILDCARD_DESCENDANT = "wildcard-descendant"
MULTI_WILDCARD = "multi-wildcard"

#: A single-wildcard lookup pattern; ``None`` marks the erased wildcard end.
WildcardPattern = tuple[str | None, str | None, str]


def extract_tuples(tree: Slt, window: int | None, eol: bool) -> TupleBag:
    """Collect the symbol-pair tuples of ``tree``.

    ``window`` bounds the edge distance between paired symbols; ``None``
    means unbounded (every ancestor-descendant pair).  With ``eol`` set, each
    node lacking a ``next`` edge also yields ``(label, !0, "n")``.
    """
    if window is not None and window < 1:
        raise ValueError("window must be >= 1")
    bag: TupleBag = Counter()
    labels = tree.labels
    # Iterative DFS carrying the labels and edge characters of the current
    # root path; ancestors within the window are paired with each node.
    path_nodes: list[int] = []
    path_edges: list[str] = []
    stack: list[tuple[int, str, int]] = [(0, "", 0)]
    while stack:
        node, edge, depth = stack.pop()
        del path_nodes[depth:]
        if depth > 0:
            del path_edges[depth - 1 :]
            path_edges.append(edge)
        else:
            del path_edges[:]
        path_nodes.append(node)
        label = labels[node]
        lo = 0 if window is None else max(0, depth - window)
        for i in range(lo, depth):
            bag[(labels[path_nodes[i]], label, "".join(path_edges[i:]))] += 1
        kids = tree.children[node]
        if eol and "n" not in kids:
            bag[(label, EOL_SYMBOL, "n")] += 1
        for kid_edge in reversed(kids):
            stack.append((kids[kid_edge], kid_edge, depth + 1))
    return bag


def bag_total(bag: TupleBag) -> int:
    """Number of tuple instances (counts included) in the bag."""
    return sum(bag.values())


def classify_query_tuple(t: SymbolTuple) -> str:
    """Classify a query tuple by where wildcards occur.

    The ``!0`` terminal is never a wildcard.  Wildcard identifiers do not
    matter for matching, only which end is a wildcard.
    """
    ancestor, descendant, _ = t
    anc_wild = unification_class(ancestor) == UNIFY_WILDCARD
    desc_wild = descendant != EOL_SYMBOL and unification_class(descendant) == UNIFY_WILDCARD
    if anc_wild and desc_wild:
        return MULTI_WILDCARD
    if anc_wild:
        return WILDCARD_ANCESTOR
    if desc_wild:
        return WILDCARD_DESCENDANT
    return CONCRETE


def wildcard_pattern(t: SymbolTuple) -> WildcardPattern:
    """Erase the wildcard end of a single-wildcard tuple for index lookup."""
    kind = classify_query_tuple(t)
    if kind == WILDCARD_ANCESTOR:
        return (None, t[1], t[2])
    if kind == WILDCARD_DESCENDANT:
        return (t[0], None, t[2])
    raise ValueError(f"not a single-wildcard tuple: {t!r}")


def generalizations(t: SymbolTuple) -> tuple[WildcardPattern, WildcardPattern]:
    """The two single-wildcard patterns an indexed tuple is reachable from."""
    ancestor, descendant, path = t
    return (None, descendant, path), (ancestor, None, path)


def serialize_tuple(t: SymbolTuple) -> str:
    """Tab-separated textual form used for index files and debug dumps."""
    return "\t".join(t)


def parse_tuple_text(text: str) -> SymbolTuple:
    parts = text.split("\t")
    if len(parts) != 3:
        raise ValueError(f"bad tuple text: {text!r}")
    return (parts[0], parts[1], parts[2])
