"""Presentation MathML to symbol layout tree conversion.

A recursive descent over the element tree.  Element namespaces are stripped,
whitespace glyphs and invisible operators are dropped, parenthesized
subexpressions and argument lists become matrix (``M!``) nodes, and scripts
attach above/below their base.  Wildcards are recognised both from
``mws:qvar`` elements and from ``<mi>`` content of the form ``?name``.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

from .slt import EDGE_LABELS, Nested, Slt

__all__ = [
    "MathMLError",
    "MalformedInputError",
    "UnsupportedElementError",
    "EmptyFormulaError",
    "parse_mathml",
]


class MathMLError(ValueError):
    """Base class for MathML conversion failures."""


class MalformedInputError(MathMLError):
    """The input is not well-formed XML."""


class UnsupportedElementError(MathMLError):
    """An element outside the supported Presentation MathML subset."""

    def __init__(self, element_name: str):
        super().__init__(f"unsupported MathML element: <{element_name}>")
        self.element_name = element_name


class EmptyFormulaError(MathMLError):
    """No symbol survives normalization."""


# Invisible operators (function application, invisible times, separator,
# invisible plus); they carry no visual symbol and are ignored for matching.
_INVISIBLE = {"⁡", "⁢", "⁣", "⁤"}

_OPEN_FENCES = "([{|"
_CLOSE_FENCES = ")]}|"
_SEPARATORS = {","}

_WILDCARD_MI = re.compile(r"^\?\w+$")
_ZERO_LENGTH = re.compile(r"^0+(\.0*)?\s*[a-z%]*$")
_UNFENCED_MATRIX = re.compile(r"^M!(\d+)x(\d+)$")
_WS_RUN = re.compile(r"\s+")


class _Node:
    """Mutable tree node used during conversion; ``W!`` marks placeholders."""

    __slots__ = ("label", "kids")

    def __init__(self, label: str):
        self.label = label
        self.kids: dict[str, _Node] = {}

    def tail(self) -> "_Node":
        node = self
        while "n" in node.kids:
            node = node.kids["n"]
        return node

    def append_next(self, other: "_Node") -> None:
        self.tail().kids["n"] = other

    def is_placeholder(self) -> bool:
        return self.label == "W!"


def parse_mathml(mathml_text: str) -> Slt:
    """Convert Presentation MathML text into a symbol layout tree.

    Raises :class:`MalformedInputError` for XML errors,
    :class:`UnsupportedElementError` for elements outside the supported
    subset, and :class:`EmptyFormulaError` when nothing displayable remains.
    """
    try:
        root = ET.fromstring(mathml_text)
    except ET.ParseError as exc:
        raise MalformedInputError(f"XML parse failure: {exc}") from exc
    node = _convert(root)
    node = _splice_placeholders(node)
    if node is None:
        raise EmptyFormulaError("formula contains no indexable symbol")
    return Slt.from_nested(_to_nested(node))


def _local_name(elem: ET.Element) -> str:
    tag = elem.tag
    if not isinstance(tag, str):
        return ""
    return tag.rpartition("}")[2]


def _clean_text(text: str | None) -> str:
    if text is None:
        return ""
    return _WS_RUN.sub(" ", text).strip()


def _token_value(elem: ET.Element) -> str:
    """Content of a token element, or an ``mglyph`` child's src/alt."""
    for child in elem:
        if _local_name(child) == "mglyph":
            return _clean_text(child.get("src") or child.get("alt"))
    return _clean_text(elem.text)


def _element_children(elem: ET.Element) -> list[ET.Element]:
    return [child for child in elem if isinstance(child.tag, str)]


def _convert_children(elem: ET.Element) -> list[_Node]:
    """Converted children with dropped (invisible/empty) ones removed."""
    out = []
    for child in _element_children(elem):
        converted = _convert(child)
        if converted is not None:
            out.append(converted)
    return out


def _convert_positional(elem: ET.Element) -> list[_Node | None]:
    """Converted children, keeping ``None`` so argument positions survive."""
    return [_convert(child) for child in _element_children(elem)]


def _convert(elem: ET.Element) -> _Node | None:
    name = _local_name(elem)
    if name == "qvar":
        wildcard = elem.get("name") or _clean_text(elem.text) or "w"
        return _Node("?" + wildcard)
    handler = _HANDLERS.get(name)
    if handler is None:
        raise UnsupportedElementError(name or str(elem.tag))
    return handler(elem)


# --- token elements ---------------------------------------------------------


def _convert_mi(elem: ET.Element) -> _Node | None:
    content = _token_value(elem)
    if not content:
        return None
    if _WILDCARD_MI.match(content):
        return _Node(content)
    return _Node("V!" + content)


def _convert_mn(elem: ET.Element) -> _Node | None:
    content = _token_value(elem)
    return _Node("N!" + content) if content else None


def _convert_mo(elem: ET.Element) -> _Node | None:
    content = _token_value(elem)
    if not content or content in _INVISIBLE:
        return None
    return _Node(content)


def _convert_mtext(elem: ET.Element) -> _Node | None:
    content = _clean_text(elem.text)
    if not content:
        return None
    return _Node("T!" + content.replace(" ", "-"))


def _convert_blank(elem: ET.Element) -> None:
    return None


# --- rows and fenced groups -------------------------------------------------


def _convert_row(elem: ET.Element) -> _Node | None:
    return _assemble_row(_convert_children(elem))


def _convert_semantics(elem: ET.Element) -> _Node | None:
    # First child holds the presentation tree; annotations are ignored.
    for child in _element_children(elem):
        if not _local_name(child).startswith("annotation"):
            return _convert(child)
    return None


def _convert_maction(elem: ET.Element) -> _Node | None:
    children = _element_children(elem)
    return _convert(children[0]) if children else None


def _assemble_row(items: list[_Node], separators: set[str] = _SEPARATORS) -> _Node | None:
    items = [node for node in items if not (node.is_placeholder() and not node.kids)]
    if not items:
        return None
    if len(items) > 2 and _is_fence(items[0], _OPEN_FENCES) and _is_fence(items[-1], _CLOSE_FENCES):
        return _fence_group(items[1:-1], items[0].label, items[-1].label, separators)
    head = items[0]
    tail = head.tail()
    for node in items[1:]:
        tail.kids["n"] = node
        tail = node.tail()
    return head


def _is_fence(node: _Node, fence_set: str) -> bool:
    return node.label in fence_set and not node.kids


def _fence_group(
    interior: list[_Node], open_fence: str, close_fence: str, separators: set[str]
) -> _Node:
    """Wrap a fenced expression list into an ``M!`` group node.

    A lone unfenced tabular node absorbs the fences into its own label;
    otherwise separator symbols split the interior into the cells of a 1xN
    group, mirroring how n-ary argument lists are displayed.
    """
    if len(interior) == 1 and "n" not in interior[0].kids:
        match = _UNFENCED_MATRIX.match(interior[0].label)
        if match:
            inner = interior[0]
            inner.label = f"M!{open_fence}{close_fence}{match.group(1)}x{match.group(2)}"
            return inner
    cells: list[list[_Node]] = [[]]
    for node in interior:
        if node.label in separators and not node.kids:
            cells.append([])
        else:
            cells[-1].append(node)
    chains = [_assemble_row(cell, separators) for cell in cells]
    chains = [chain for chain in chains if chain is not None]
    if not chains:
        # Nothing but fences inside: keep them as plain operators.
        head = _Node(open_fence)
        head.append_next(_Node(close_fence))
        return head
    group = _Node(f"M!{open_fence}{close_fence}1x{len(chains)}")
    group.kids["w"] = chains[0]
    for left, right in zip(chains, chains[1:]):
        left.kids["e"] = right
    return group


# --- scripts ----------------------------------------------------------------


def _script_base(base: _Node | None, needed_edges: str) -> _Node:
    """Return a node the script edges can attach to, wrapping rows if needed."""
    if base is None:
        return _Node("W!")
    if "n" in base.kids or any(edge in base.kids for edge in needed_edges):
        wrapper = _Node("M!1x1")
        wrapper.kids["w"] = base
        return wrapper
    return base


def _attach(base: _Node, edge: str, script: _Node | None) -> None:
    if script is not None:
        base.kids[edge] = script


def _convert_msub(elem: ET.Element) -> _Node | None:
    return _scripted(elem, ("b",))


def _convert_msup(elem: ET.Element) -> _Node | None:
    return _scripted(elem, ("a",))


def _convert_msubsup(elem: ET.Element) -> _Node | None:
    return _scripted(elem, ("b", "a"))


def _scripted(elem: ET.Element, edges: tuple[str, ...]) -> _Node | None:
    children = _convert_positional(elem)
    base = children[0] if children else None
    scripts = children[1 : 1 + len(edges)]
    if not any(script is not None for script in scripts):
        return base
    base = _script_base(base, "".join(edges))
    for edge, script in zip(edges, scripts):
        _attach(base, edge, script)
    return base


def _convert_mmultiscripts(elem: ET.Element) -> _Node | None:
    base: _Node | None = None
    seen_base = False
    post: list[_Node | None] = []
    pre: list[_Node | None] = []
    target = post
    for child in _element_children(elem):
        if _local_name(child) == "mprescripts":
            target = pre
            continue
        converted = _convert(child)
        if not seen_base:
            base = converted
            seen_base = True
        else:
            target.append(converted)

    subs = _chain([node for node in post[0::2] if node is not None])
    sups = _chain([node for node in post[1::2] if node is not None])
    presubs = _chain([node for node in pre[0::2] if node is not None])
    presups = _chain([node for node in pre[1::2] if node is not None])
    if not any((subs, sups, presubs, presups)):
        return base
    base = _script_base(base, "abAB")
    _attach(base, "b", subs)
    _attach(base, "a", sups)
    _attach(base, "B", presubs)
    _attach(base, "A", presups)
    return base


def _chain(nodes: list[_Node]) -> _Node | None:
    if not nodes:
        return None
    for left, right in zip(nodes, nodes[1:]):
        left.append_next(right)
    return nodes[0]


# --- fractions, radicals, tables --------------------------------------------


def _convert_mfrac(elem: ET.Element) -> _Node | None:
    children = _convert_positional(elem)
    numerator = children[0] if len(children) > 0 else None
    denominator = children[1] if len(children) > 1 else None
    thickness = elem.get("linethickness", "")
    if thickness and _ZERO_LENGTH.match(thickness.strip()):
        # Zero-thickness fractions render as stacked rows (binomials).
        return _make_table([[numerator], [denominator]])
    node = _Node("F!")
    _attach(node, "a", numerator)
    _attach(node, "b", denominator)
    return node


def _convert_msqrt(elem: ET.Element) -> _Node | None:
    node = _Node("R!")
    _attach(node, "w", _assemble_row(_convert_children(elem)))
    return node


def _convert_mroot(elem: ET.Element) -> _Node | None:
    children = _convert_positional(elem)
    node = _Node("R!")
    _attach(node, "w", children[0] if len(children) > 0 else None)
    _attach(node, "a", children[1] if len(children) > 1 else None)
    return node


def _convert_mtable(elem: ET.Element) -> _Node | None:
    rows: list[list[_Node | None]] = []
    for child in _element_children(elem):
        name = _local_name(child)
        if name in ("mtr", "mlabeledtr"):
            cells: list[_Node | None] = []
            for cell in _element_children(child):
                if _local_name(cell) == "mtd":
                    cells.append(_assemble_row(_convert_children(cell)))
                else:
                    cells.append(_convert(cell))
            rows.append(cells)
        else:
            rows.append([_convert(child)])
    return _make_table(rows)


def _make_table(rows: list[list[_Node | None]]) -> _Node | None:
    if not rows:
        return None
    n_cols = max(len(row) for row in rows)
    if n_cols == 0:
        return None
    # Ragged rows are padded with placeholder cells so that the row-major
    # element chain stays rectangular; placeholders are spliced out later.
    cells: list[_Node] = []
    for row in rows:
        padded = list(row) + [None] * (n_cols - len(row))
        cells.extend(node if node is not None else _Node("W!") for node in padded)
    table = _Node(f"M!{len(rows)}x{n_cols}")
    table.kids["w"] = cells[0]
    for left, right in zip(cells, cells[1:]):
        left.kids["e"] = right
    return table


def _convert_mfenced(elem: ET.Element) -> _Node | None:
    children = _convert_children(elem)
    opening = elem.get("open", "(").strip() or "("
    closing = elem.get("close", ")").strip() or ")"
    separators = [ch for ch in elem.get("separators", ",") if not ch.isspace()]
    separator_set = set(separators) or {","}
    row: list[_Node] = [_Node(opening)]
    for i, child in enumerate(children):
        if i > 0:
            row.append(_Node(separators[min(i - 1, len(separators) - 1)] if separators else ","))
        row.append(child)
    row.append(_Node(closing))
    return _assemble_row(row, separator_set)


_HANDLERS = {
    "math": _convert_row,
    "mrow": _convert_row,
    "mstyle": _convert_row,
    "mpadded": _convert_row,
    "merror": _convert_row,
    "menclose": _convert_row,
    "maction": _convert_maction,
    "semantics": _convert_semantics,
    "mi": _convert_mi,
    "mn": _convert_mn,
    "mo": _convert_mo,
    "mtext": _convert_mtext,
    "ms": _convert_mtext,
    "mspace": _convert_blank,
    "mphantom": _convert_blank,
    "none": _convert_blank,
    "msub": _convert_msub,
    "msup": _convert_msup,
    "msubsup": _convert_msubsup,
    "munder": _convert_msub,
    "mover": _convert_msup,
    "munderover": _convert_msubsup,
    "mmultiscripts": _convert_mmultiscripts,
    "mprescripts": _convert_blank,
    "mfrac": _convert_mfrac,
    "msqrt": _convert_msqrt,
    "mroot": _convert_mroot,
    "mfenced": _convert_mfenced,
    "mtable": _convert_mtable,
}


# --- placeholder splicing and finalization ----------------------------------

# Replacement preference when a placeholder has children: continue the
# inline chain first, then structural edges.
_SPLICE_ORDER = ("n", "e", "w", "a", "b", "A", "B")


def _splice_placeholders(root: _Node | None) -> _Node | None:
    """Remove ``W!`` nodes, promoting a child to keep chains connected."""
    if root is None:
        return None
    holder = _Node("")
    holder.kids["n"] = root
    # Children first (post-order), so replacements are already spliced.
    order: list[tuple[_Node, str, _Node]] = []
    stack: list[_Node] = [holder]
    while stack:
        node = stack.pop()
        for edge, child in node.kids.items():
            order.append((node, edge, child))
            stack.append(child)
    for parent, edge, node in reversed(order):
        if not node.is_placeholder():
            continue
        replacement = None
        for splice_edge in _SPLICE_ORDER:
            if splice_edge in node.kids:
                replacement = node.kids.pop(splice_edge)
                break
        if replacement is None:
            del parent.kids[edge]
            continue
        for extra_edge, extra in node.kids.items():
            # Remaining children move to the replacement where a slot is free.
            replacement.kids.setdefault(extra_edge, extra)
        parent.kids[edge] = replacement
    return holder.kids.get("n")


def _to_nested(root: _Node) -> Nested:
    memo: dict[int, Nested] = {}
    order: list[_Node] = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(node.kids.values())
    for node in reversed(order):
        memo[id(node)] = (
            node.label,
            {edge: memo[id(child)] for edge, child in node.kids.items() if edge in EDGE_LABELS},
        )
    return memo[id(root)]
