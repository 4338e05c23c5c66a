"""Immutable inverted index over symbol-pair tuples.

Dictionaries assign compact integer ids (formulae by canonical string,
documents by name, tuples and wildcard patterns by content); postings lists
map tuple ids to the formulae containing them.  Tuple ids follow the sorted
tuple order, so the id order of a wildcard expansion is also its
deterministic matching order.

On-disk layout (single binary file, little-endian, unsigned varints):

    magic "TGNT" | version u8 | window varint (0 = unbounded) | eol u8
    D2 document names | D3 tuple texts | D1 canonical strings   (ids by order)
    A1 per-formula tuple totals
    PL1 per tuple: (formId delta, count)*
    PL2 per formula: (docId delta, position)*
    PL3 per wildcard pattern: (tupleId delta)*
    crc32 of everything above

Wildcard patterns themselves are not stored; they are re-derived from D3 at
load time, in the same order as at build time.
"""

from __future__ import annotations

import json
import logging
import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .mathml import MathMLError, parse_mathml
from .tuples import (
    SymbolTuple,
    TupleBag,
    WildcardPattern,
    bag_total,
    extract_tuples,
    generalizations,
    parse_tuple_text,
    serialize_tuple,
)

logger = logging.getLogger(__name__)

MAGIC = b"TGNT"
FORMAT_VERSION = 1


class EmptyCorpusError(ValueError):
    """No formula could be indexed from the corpus."""


class FormatVersionMismatchError(ValueError):
    """The file is not an index file or uses an unknown format version."""


class ChecksumMismatchError(ValueError):
    """The index file is corrupt."""


@dataclass
class CorpusRecord:
    """One document and its formulae as ``(position, mathml)`` pairs."""

    document: str
    formulae: list[tuple[int, str]]


@dataclass
class BuildStats:
    records: int = 0
    formulae_seen: int = 0
    parse_failures: int = 0
    skipped_records: int = 0


class Index:
    """The built index; immutable once constructed, safe to share."""

    __slots__ = (
        "window",
        "eol",
        "doc_names",
        "canonicals",
        "d1",
        "d2",
        "d3",
        "d4",
        "tuple_list",
        "pattern_list",
        "a1",
        "pl1",
        "pl2",
        "pl3",
    )

    def __init__(
        self,
        window: int | None,
        eol: bool,
        doc_names: list[str],
        canonicals: list[str],
        tuple_list: list[SymbolTuple],
        a1: list[int],
        pl1: list[list[tuple[int, int]]],
        pl2: list[list[tuple[int, int]]],
    ):
        self.window = window
        self.eol = eol
        self.doc_names = doc_names
        self.canonicals = canonicals
        self.tuple_list = tuple_list
        self.a1 = a1
        self.pl1 = pl1
        self.pl2 = pl2
        self.d1 = {canonical: i for i, canonical in enumerate(canonicals)}
        self.d2 = {name: i for i, name in enumerate(doc_names)}
        self.d3 = {t: i for i, t in enumerate(tuple_list)}
        self.pattern_list, self.d4, self.pl3 = _derive_wildcards(tuple_list)

    @property
    def formula_count(self) -> int:
        return len(self.canonicals)

    @property
    def doc_count(self) -> int:
        return len(self.doc_names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Index):
            return NotImplemented
        return (
            self.window == other.window
            and self.eol == other.eol
            and self.doc_names == other.doc_names
            and self.canonicals == other.canonicals
            and self.tuple_list == other.tuple_list
            and self.a1 == other.a1
            and self.pl1 == other.pl1
            and self.pl2 == other.pl2
            and self.pl3 == other.pl3
        )

    # -- persistence -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        buf = bytearray()
        buf += MAGIC
        buf.append(FORMAT_VERSION)
        _put_uvarint(buf, 0 if self.window is None else self.window)
        buf.append(1 if self.eol else 0)
        _put_strings(buf, self.doc_names)
        _put_strings(buf, [serialize_tuple(t) for t in self.tuple_list])
        _put_strings(buf, self.canonicals)
        _put_uvarint(buf, len(self.a1))
        for total in self.a1:
            _put_uvarint(buf, total)
        for postings in self.pl1:
            _put_uvarint(buf, len(postings))
            previous = 0
            for form_id, count in postings:
                _put_uvarint(buf, form_id - previous)
                _put_uvarint(buf, count)
                previous = form_id
        for doc_refs in self.pl2:
            _put_uvarint(buf, len(doc_refs))
            previous = 0
            for doc_id, position in doc_refs:
                _put_uvarint(buf, doc_id - previous)
                _put_uvarint(buf, position)
                previous = doc_id
        _put_uvarint(buf, len(self.pl3))
        for expansion in self.pl3:
            _put_uvarint(buf, len(expansion))
            previous = 0
            for tuple_id in expansion:
                _put_uvarint(buf, tuple_id - previous)
                previous = tuple_id
        checksum = zlib.crc32(buf)
        buf += checksum.to_bytes(4, "little")
        Path(path).write_bytes(bytes(buf))

    @classmethod
    def load(cls, path: str | Path) -> "Index":
        data = Path(path).read_bytes()
        if len(data) < len(MAGIC) + 1 or data[: len(MAGIC)] != MAGIC:
            raise FormatVersionMismatchError(f"not an index file: {path}")
        if data[len(MAGIC)] != FORMAT_VERSION:
            raise FormatVersionMismatchError(
                f"unsupported index format version {data[len(MAGIC)]}"
            )
        if len(data) < len(MAGIC) + 5:
            raise ChecksumMismatchError("index file truncated")
        body, trailer = data[:-4], data[-4:]
        if zlib.crc32(body) != int.from_bytes(trailer, "little"):
            raise ChecksumMismatchError(f"checksum mismatch in {path}")
        reader = _Reader(body, len(MAGIC) + 1)
        try:
            window = reader.uvarint() or None
            eol = reader.byte() != 0
            doc_names = reader.strings()
            tuple_list = [parse_tuple_text(text) for text in reader.strings()]
            canonicals = reader.strings()
            a1 = [reader.uvarint() for _ in range(reader.uvarint())]
            pl1 = [reader.delta_pairs() for _ in range(len(tuple_list))]
            pl2 = [reader.delta_pairs() for _ in range(len(canonicals))]
            pl3_count = reader.uvarint()
            pl3 = [reader.delta_list() for _ in range(pl3_count)]
            reader.expect_end()
        except (ValueError, IndexError) as exc:
            raise ChecksumMismatchError(f"malformed index data: {exc}") from exc
        index = cls(window, eol, doc_names, canonicals, tuple_list, a1, pl1, pl2)
        if pl3 != index.pl3:
            raise ChecksumMismatchError("stored wildcard expansions are inconsistent")
        return index

    # -- integrity (used by tests) ----------------------------------------

    def check_integrity(self) -> None:
        n = self.formula_count
        assert len(self.a1) == n and len(self.pl2) == n
        per_form = [0] * n
        for postings in self.pl1:
            assert all(
                postings[i][0] < postings[i + 1][0] for i in range(len(postings) - 1)
            ), "PL1 not strictly increasing"
            for form_id, count in postings:
                assert 0 <= form_id < n and count > 0
                per_form[form_id] += count
        assert per_form == self.a1, "A1 disagrees with PL1 totals"
        for doc_refs in self.pl2:
            assert doc_refs, "formula without documents"
            for doc_id, position in doc_refs:
                assert 0 <= doc_id < self.doc_count and position >= 0
        expected = set()
        for t in self.tuple_list:
            expected.update(generalizations(t))
        assert expected == set(self.pattern_list), "D4 coverage mismatch"
        for expansion in self.pl3:
            assert all(
                expansion[i] < expansion[i + 1] for i in range(len(expansion) - 1)
            ), "PL3 not strictly increasing"
            assert all(0 <= tid < len(self.tuple_list) for tid in expansion)


def _derive_wildcards(
    tuple_list: list[SymbolTuple],
) -> tuple[list[WildcardPattern], dict[WildcardPattern, int], list[list[int]]]:
    """Wildcard patterns (first-seen over ascending tuple id) and expansions."""
    d4: dict[WildcardPattern, int] = {}
    pl3: list[list[int]] = []
    for tuple_id, t in enumerate(tuple_list):
        for pattern in generalizations(t):
            pattern_id = d4.get(pattern)
            if pattern_id is None:
                pattern_id = len(pl3)
                d4[pattern] = pattern_id
                pl3.append([])
            pl3[pattern_id].append(tuple_id)
    return list(d4), d4, pl3


# --- building ----------------------------------------------------------------


def build_index(
    corpus: Iterable[CorpusRecord],
    window: int | None,
    eol: bool,
    *,
    reorder: bool = True,
    stats: BuildStats | None = None,
) -> Index:
    """Build an index from a stream of corpus records.

    Identical formulae (equal canonical strings) share one formula id, and
    only the first occurrence per document is recorded.  Formula ids are
    renumbered by the size-quartile permutation unless ``reorder`` is off.
    Unparseable formulae are skipped with a logged warning.
    """
    if stats is None:
        stats = BuildStats()
    d1: dict[str, int] = {}
    d2: dict[str, int] = {}
    doc_names: list[str] = []
    canonicals: list[str] = []
    bags: list[TupleBag] = []
    doc_refs: list[dict[int, int]] = []  # formId -> {docId: first position}

    for record in corpus:
        stats.records += 1
        doc_id = d2.get(record.document)
        if doc_id is None:
            doc_id = len(doc_names)
            d2[record.document] = doc_id
            doc_names.append(record.document)
        for position, mathml_text in record.formulae:
            stats.formulae_seen += 1
            try:
                tree = parse_mathml(mathml_text)
            except MathMLError as exc:
                stats.parse_failures += 1
                logger.warning(
                    "skipping formula at %s:%d: %s", record.document, position, exc
                )
                continue
            canonical = tree.canonical()
            form_id = d1.get(canonical)
            if form_id is None:
                form_id = len(canonicals)
                d1[canonical] = form_id
                canonicals.append(canonical)
                bags.append(extract_tuples(tree, window, eol))
                doc_refs.append({})
            doc_refs[form_id].setdefault(doc_id, position)

    if not canonicals:
        raise EmptyCorpusError("no formula could be indexed")

    a1 = [bag_total(bag) for bag in bags]
    if reorder:
        new_ids = _quartile_permutation(a1)
        order = sorted(range(len(new_ids)), key=new_ids.__getitem__)
        canonicals = [canonicals[old] for old in order]
        bags = [bags[old] for old in order]
        doc_refs = [doc_refs[old] for old in order]
        a1 = [a1[old] for old in order]

    tuple_list = sorted({t for bag in bags for t in bag})
    tuple_ids = {t: i for i, t in enumerate(tuple_list)}
    pl1: list[list[tuple[int, int]]] = [[] for _ in tuple_list]
    for form_id, bag in enumerate(bags):
        for t, count in bag.items():
            pl1[tuple_ids[t]].append((form_id, count))
    pl2 = [sorted(refs.items()) for refs in doc_refs]
    return Index(window, eol, doc_names, canonicals, tuple_list, a1, pl1, pl2)


def _quartile_permutation(sizes: list[int]) -> list[int]:
    """Old id -> new id, ordering formulae ``q2, reverse(q1), q3, q4`` by size.

    Interleaving the small-size quartiles this way clusters the sizes most
    often rejected by the Dice thresholds away from the sequence start.
    """
    n = len(sizes)
    by_size = sorted(range(n), key=lambda i: (sizes[i], i))
    q1, q2 = by_size[: n // 4], by_size[n // 4 : n // 2]
    q3, q4 = by_size[n // 2 : 3 * n // 4], by_size[3 * n // 4 :]
    sequence = q2 + q1[::-1] + q3 + q4
    new_ids = [0] * n
    for new_id, old_id in enumerate(sequence):
        new_ids[old_id] = new_id
    return new_ids


def reorder_formula_ids(index: Index) -> Index:
    """Renumber formula ids by the size-quartile permutation.

    Query results are unchanged; only the internal id layout moves.
    """
    new_ids = _quartile_permutation(index.a1)
    order = sorted(range(len(new_ids)), key=new_ids.__getitem__)
    canonicals = [index.canonicals[old] for old in order]
    a1 = [index.a1[old] for old in order]
    pl2 = [index.pl2[old] for old in order]
    pl1 = [
        sorted((new_ids[form_id], count) for form_id, count in postings)
        for postings in index.pl1
    ]
    return Index(
        index.window, index.eol, list(index.doc_names), canonicals,
        list(index.tuple_list), a1, pl1, pl2,
    )


# --- corpus readers -----------------------------------------------------------


def iter_jsonl_corpus(path: str | Path, stats: BuildStats | None = None) -> Iterator[CorpusRecord]:
    """Read a JSON-lines corpus: ``{"doc": name, "formulae": [{"pos", "mathml"}]}``.

    Malformed lines are skipped with a warning (and counted when ``stats`` is
    given) rather than aborting the build.
    """
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = _parse_jsonl_line(line)
            if record is None:
                if stats is not None:
                    stats.skipped_records += 1
                logger.warning("skipping malformed corpus line %d of %s", line_no, path)
                continue
            yield record


def _parse_jsonl_line(line: str) -> CorpusRecord | None:
    try:
        obj = json.loads(line)
        document = obj["doc"]
        formulae = [(int(f["pos"]), str(f["mathml"])) for f in obj["formulae"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        return None
    if not isinstance(document, str):
        return None
    positions = [pos for pos, _ in formulae]
    if any(b <= a for a, b in zip(positions, positions[1:])):
        return None  # positions must be strictly increasing
    return CorpusRecord(document, formulae)


_MATH_ELEMENT = re.compile(
    r"<(?:[A-Za-z_][\w.-]*:)?math(?:[\s>]).*?</(?:[A-Za-z_][\w.-]*:)?math\s*>",
    re.DOTALL,
)


def iter_html_corpus(root: str | Path) -> Iterator[CorpusRecord]:
    """Walk a directory of HTML/XHTML files, extracting ``<math>`` elements.

    One record per file; the document name is the path relative to ``root``
    and positions are occurrence ordinals in document order.
    """
    root = Path(root)
    paths = sorted(
        p for p in root.rglob("*") if p.suffix.lower() in (".html", ".xhtml", ".xml", ".htm")
    )
    for path in paths:
        text = path.read_text(encoding="utf-8", errors="replace")
        formulae = [
            (ordinal, match.group(0))
            for ordinal, match in enumerate(_MATH_ELEMENT.finditer(text))
        ]
        if formulae:
            yield CorpusRecord(str(path.relative_to(root)), formulae)


# --- varint helpers -----------------------------------------------------------


def _put_uvarint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varints are unsigned")
    while value >= 0x80:
        buf.append((value & 0x7F) | 0x80)
        value >>= 7
    buf.append(value)


def _put_strings(buf: bytearray, strings: list[str]) -> None:
    _put_uvarint(buf, len(strings))
    for text in strings:
        raw = text.encode("utf-8")
        _put_uvarint(buf, len(raw))
        buf += raw


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def byte(self) -> int:
        value = self.data[self.pos]
        self.pos += 1
        return value

    def uvarint(self) -> int:
        shift = 0
        value = 0
        while True:
            byte = self.data[self.pos]
            self.pos += 1
            value |= (byte & 0x7F) << shift
            if byte < 0x80:
                return value
            shift += 7
            if shift > 63:
                raise ValueError("varint too long")

    def strings(self) -> list[str]:
        count = self.uvarint()
        out = []
        for _ in range(count):
            length = self.uvarint()
            raw = self.data[self.pos : self.pos + length]
            if len(raw) != length:
                raise ValueError("truncated string")
            self.pos += length
            out.append(raw.decode("utf-8"))
        return out

    def delta_pairs(self) -> list[tuple[int, int]]:
        count = self.uvarint()
        out = []
        previous = 0
        for _ in range(count):
            previous += self.uvarint()
            out.append((previous, self.uvarint()))
        return out

    def delta_list(self) -> list[int]:
        count = self.uvarint()
        out = []
        previous = 0
        for _ in range(count):
            previous += self.uvarint()
            out.append(previous)
        return out

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise ValueError("trailing bytes")
