"""End-to-end query pipeline: parse, retrieve, re-rank, group, respond.

``run_query`` parses a MathML query, retrieves top-k candidates by Dice
score, optionally re-scores them with maximum subtree similarity, groups
hits that match the same part of the query in the same way, and ranks the
documents containing them.  Responses serialize to JSON with stable field
names for the HTTP API and web UI.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key

from .core import ALL_ON, OptimizationFlags, plan_query, search
from .index import Index
from .mathml import parse_mathml
from .mss import MssResult, ScoreTriple, mss
from .slt import Slt
from .tuples import extract_tuples

__all__ = [
    "FormulaHit",
    "ResultGroup",
    "DocumentHit",
    "SearchResponse",
    "run_query",
    "rank_documents",
    "structure_key",
]


@dataclass
class FormulaHit:
    form_id: int
    canonical: str
    dice: float
    matched: int
    triple: ScoreTriple | None  # None when re-ranking is disabled
    highlight: list[str] | None  # per candidate node: exact/unified/unmatched
    docs: list[tuple[str, int]]  # (document name, first position)

    def to_json(self) -> dict:
        return {
            "formId": self.form_id,
            "canonical": self.canonical,
            "diceScore": self.dice,
            "triple": self.triple.to_json() if self.triple else None,
            "highlight": self.highlight,
            "docs": [{"docName": name, "position": pos} for name, pos in self.docs],
        }


@dataclass
class ResultGroup:
    structure_key: str
    hits: list[FormulaHit]

    def to_json(self) -> dict:
        return {
            "structureKey": self.structure_key,
            "hits": [hit.to_json() for hit in self.hits],
        }


@dataclass
class DocumentHit:
    name: str
    best_triple: ScoreTriple | None
    best_dice: float
    hit_count: int

    def to_json(self) -> dict:
        return {
            "docName": self.name,
            "bestTriple": self.best_triple.to_json() if self.best_triple else None,
            "hitCount": self.hit_count,
        }


@dataclass
class SearchResponse:
    query: str  # canonical form of the parsed query
    core_ms: float
    rerank_ms: float
    groups: list[ResultGroup]
    documents: list[DocumentHit]

    def to_json_dict(self) -> dict:
        return {
            "query": self.query,
            "timingMs": {"coreMs": self.core_ms, "rerankMs": self.rerank_ms},
            "groups": [group.to_json() for group in self.groups],
            "documents": [doc.to_json() for doc in self.documents],
        }


@dataclass
class _Ranked:
    hit: FormulaHit
    dice_exact: Fraction
    candidate_tree: Slt | None
    result: MssResult | None


def run_query(
    index: Index,
    query_mathml: str,
    k: int = 100,
    rerank: bool = True,
    flags: OptimizationFlags = ALL_ON,
) -> SearchResponse:
    """Run the full two-stage pipeline for one query.

    Re-ranking permutes the core top-k but never adds or drops hits; the
    final order is by score triple, Dice score, then formula id.
    """
    query_tree = parse_mathml(query_mathml)
    query_bag = extract_tuples(query_tree, index.window, index.eol)
    started = time.perf_counter()
    plan = plan_query(index, query_bag)
    candidates = search(index, plan, k, flags)
    core_ms = (time.perf_counter() - started) * 1000.0

    ranked: list[_Ranked] = []
    started = time.perf_counter()
    for candidate in candidates:
        canonical = index.canonicals[candidate.form_id]
        docs = [(index.doc_names[doc_id], pos) for doc_id, pos in candidate.doc_refs]
        dice_exact = Fraction(
            2 * candidate.matched, plan.query_size + index.a1[candidate.form_id]
        )
        candidate_tree = None
        result = None
        highlight = None
        triple = None
        if rerank:
            candidate_tree = Slt.from_canonical(canonical)
            result = mss(query_tree, candidate_tree)
            triple = result.triple
            highlight = _highlight_classes(query_tree, candidate_tree, result)
        ranked.append(
            _Ranked(
                FormulaHit(
                    candidate.form_id, canonical, candidate.score,
                    candidate.matched, triple, highlight, docs,
                ),
                dice_exact,
                candidate_tree,
                result,
            )
        )
    if rerank:
        ranked.sort(key=cmp_to_key(_compare_ranked))
    rerank_ms = (time.perf_counter() - started) * 1000.0

    groups = _group_hits(query_tree, ranked, rerank)
    documents = rank_documents([entry.hit for entry in ranked])
    return SearchResponse(query_tree.canonical(), core_ms, rerank_ms, groups, documents)


def _compare_ranked(a: _Ranked, b: _Ranked) -> int:
    if a.hit.triple != b.hit.triple:
        return -1 if a.hit.triple > b.hit.triple else 1
    if a.dice_exact != b.dice_exact:
        return -1 if a.dice_exact > b.dice_exact else 1
    return -1 if a.hit.form_id < b.hit.form_id else (a.hit.form_id != b.hit.form_id)


def _exact_query_nodes(query_tree: Slt, candidate_tree: Slt, result: MssResult) -> set[int]:
    return {
        q
        for q in result.matched
        if query_tree.labels[q] == candidate_tree.labels[result.image[q]]
    }


def _highlight_classes(query_tree: Slt, candidate_tree: Slt, result: MssResult) -> list[str]:
    images = set(result.image.values())
    exact_images = {
        result.image[q] for q in _exact_query_nodes(query_tree, candidate_tree, result)
    }
    classes = []
    for node in range(candidate_tree.size):
        if node in exact_images:
            classes.append("exact")
        elif node in images:
            classes.append("unified")
        else:
            classes.append("unmatched")
    return classes


def _group_hits(query_tree: Slt, ranked: list[_Ranked], rerank: bool) -> list[ResultGroup]:
    groups: dict[str, ResultGroup] = {}
    for entry in ranked:
        if rerank and entry.result is not None and entry.candidate_tree is not None:
            key = structure_key(query_tree, entry.candidate_tree, entry.result)
        else:
            key = entry.hit.canonical
        group = groups.get(key)
        if group is None:
            group = ResultGroup(key, [])
            groups[key] = group
        group.hits.append(entry.hit)
    return list(groups.values())


def structure_key(query_tree: Slt, candidate_tree: Slt, result: MssResult) -> str:
    """Canonical query string annotated with a per-node match flag.

    Flags are ``e`` (exactly matched), ``u`` (unified) and ``-`` (outside
    the matched set), appended after a ``#`` in pre-order; hits with equal
    keys matched the same query subtree the same way.
    """
    exact_nodes = _exact_query_nodes(query_tree, candidate_tree, result)
    flags = ["-"] * query_tree.size
    for q in result.matched:
        flags[q] = "e" if q in exact_nodes else "u"
    return query_tree.canonical() + "#" + "".join(flags)


def rank_documents(hits: list[FormulaHit]) -> list[DocumentHit]:
    """Rank documents by their best hit, then hit count, then name."""
    by_name: dict[str, DocumentHit] = {}
    for hit in hits:
        for name, _position in hit.docs:
            doc = by_name.get(name)
            if doc is None:
                by_name[name] = DocumentHit(name, hit.triple, hit.dice, 1)
            else:
                doc.hit_count += 1
                if _better_doc_score(hit, doc):
                    doc.best_triple = hit.triple
                    doc.best_dice = hit.dice
    documents = list(by_name.values())
    documents.sort(key=cmp_to_key(_compare_documents))
    return documents


def _better_doc_score(hit: FormulaHit, doc: DocumentHit) -> bool:
    if hit.triple is not None and doc.best_triple is not None:
        if hit.triple != doc.best_triple:
            return hit.triple > doc.best_triple
    return hit.dice > doc.best_dice


def _compare_documents(a: DocumentHit, b: DocumentHit) -> int:
    if (
        a.best_triple is not None
        and b.best_triple is not None
        and a.best_triple != b.best_triple
    ):
        return -1 if a.best_triple > b.best_triple else 1
    if a.best_dice != b.best_dice:
        return -1 if a.best_dice > b.best_dice else 1
    if a.hit_count != b.hit_count:
        return -1 if a.hit_count > b.hit_count else 1
    return -1 if a.name < b.name else (a.name != b.name)
