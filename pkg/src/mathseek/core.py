"""First-stage retrieval: top-k formulae by Dice's coefficient over tuples.

The query's tuples select postings lists which are advanced along formula
ids in order (document-at-a-time over formulae).  For each candidate the
overlap with the query bag is counted greedily: concrete tuples consume
``min(query count, candidate count)`` first, then each single-wildcard tuple
consumes still-unallocated candidate tuples from its expansion, at most its
query count in total.  The score is ``2 * matched / (|query| + |candidate|)``.

All threshold and ranking comparisons use exact integer arithmetic, so
results are identical with any combination of the optimizations enabled:

    O1  galloping (doubling) search when iterators skip forward
    O2  skip candidates whose tuple total cannot beat the current k-th score
    O3  once wildcard-only candidates cannot win, iterate concrete tuples only
    O4  stop consuming a wildcard's expansion once its query count is spent
    O5  scan iterators for large postings lists first
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, replace
from fractions import Fraction

from .index import Index
from .tuples import (
    CONCRETE,
    MULTI_WILDCARD,
    SymbolTuple,
    TupleBag,
    classify_query_tuple,
    wildcard_pattern,
)

__all__ = [
    "OptimizationFlags",
    "ALL_ON",
    "ALL_OFF",
    "QueryPlan",
    "CandidateHit",
    "plan_query",
    "search",
]


@dataclass(frozen=True)
class OptimizationFlags:
    galloping: bool = True  # O1
    size_threshold: bool = True  # O2
    wildcard_skip: bool = True  # O3
    wildcard_early_stop: bool = True  # O4
    large_first: bool = True  # O5

    def only(self, **kwargs: bool) -> "OptimizationFlags":
        return replace(self, **kwargs)


ALL_ON = OptimizationFlags()
ALL_OFF = OptimizationFlags(False, False, False, False, False)


@dataclass
class ConcreteTerm:
    tuple_: SymbolTuple
    tuple_id: int | None  # None when absent from the index
    count: int


@dataclass
class WildcardTerm:
    pattern: tuple
    pattern_id: int | None
    count: int
    expansion: list[int]  # tuple ids, ascending


@dataclass
class QueryPlan:
    concrete: list[ConcreteTerm]
    wildcard: list[WildcardTerm]
    ignored: list[SymbolTuple]  # multi-wildcard tuples are not evaluated
    query_size: int


@dataclass
class CandidateHit:
    form_id: int
    matched: int
    score: float
    doc_refs: list[tuple[int, int]]


def plan_query(index: Index, query_bag: TupleBag) -> QueryPlan:
    """Resolve a query bag against the index dictionaries.

    Multi-wildcard tuples are recorded but excluded from evaluation and from
    the query size; single-wildcard tuples with the same erased pattern are
    merged.  Absent tuples keep their query count (they still weigh down the
    Dice denominator) but contribute no postings.
    """
    concrete: list[ConcreteTerm] = []
    wildcard: dict[tuple, WildcardTerm] = {}
    ignored: list[SymbolTuple] = []
    query_size = 0
    for t, count in query_bag.items():
        kind = classify_query_tuple(t)
        if kind == MULTI_WILDCARD:
            ignored.append(t)
            continue
        query_size += count
        if kind == CONCRETE:
            concrete.append(ConcreteTerm(t, index.d3.get(t), count))
            continue
        pattern = wildcard_pattern(t)
        term = wildcard.get(pattern)
        if term is not None:
            term.count += count
            continue
        pattern_id = index.d4.get(pattern)
        expansion = index.pl3[pattern_id] if pattern_id is not None else []
        wildcard[pattern] = WildcardTerm(pattern, pattern_id, count, expansion)
    return QueryPlan(concrete, list(wildcard.values()), ignored, query_size)


class _ConcreteIter:
    __slots__ = ("postings", "pos", "count", "tuple_id")

    def __init__(self, postings: list[tuple[int, int]], count: int, tuple_id: int):
        self.postings = postings
        self.pos = 0
        self.count = count
        self.tuple_id = tuple_id

    def head(self) -> int | None:
        return self.postings[self.pos][0] if self.pos < len(self.postings) else None


class _WildcardIter:
    """Merged view over one wildcard's expansion postings lists.

    ``heads`` is a min-heap of ``(form id, sub index)``; equal form ids pop
    in expansion order, which is ascending tuple id, fixing the order in
    which the wildcard consumes candidate tuples.
    """

    __slots__ = ("count", "postings", "positions", "tuple_ids", "heads")

    def __init__(self, count: int, subs: list[tuple[int, list[tuple[int, int]]]]):
        self.count = count
        self.tuple_ids = [tuple_id for tuple_id, _ in subs]
        self.postings = [postings for _, postings in subs]
        self.positions = [0] * len(subs)
        self.heads = [(postings[0][0], i) for i, postings in enumerate(self.postings)]
        heapq.heapify(self.heads)

    def head(self) -> int | None:
        return self.heads[0][0] if self.heads else None

    def total_postings(self) -> int:
        return sum(len(postings) for postings in self.postings)

    def pop_at(self, form_id: int):
        """Yield ``(sub index, candidate count)`` for every entry at ``form_id``.

        Each yielded sub iterator is advanced past ``form_id`` afterwards.
        """
        heads = self.heads
        while heads and heads[0][0] == form_id:
            _, sub_index = heapq.heappop(heads)
            postings = self.postings[sub_index]
            pos = self.positions[sub_index]
            yield sub_index, postings[pos][1]
            pos += 1
            self.positions[sub_index] = pos
            if pos < len(postings):
                heapq.heappush(heads, (postings[pos][0], sub_index))

    def seek(self, target: int, galloping: bool) -> None:
        heads = self.heads
        while heads and heads[0][0] < target:
            _, sub_index = heapq.heappop(heads)
            postings = self.postings[sub_index]
            pos = _advance(postings, self.positions[sub_index], target, galloping)
            self.positions[sub_index] = pos
            if pos < len(postings):
                heapq.heappush(heads, (postings[pos][0], sub_index))


def _advance(postings: list[tuple[int, int]], pos: int, target: int, galloping: bool) -> int:
    """First position at or past ``target``, starting from ``pos``."""
    n = len(postings)
    if galloping:
        if pos >= n or postings[pos][0] >= target:
            return pos
        step = 1
        while pos + step < n and postings[pos + step][0] < target:
            pos += step
            step <<= 1
        return bisect_left(postings, (target, -1), pos + 1, min(pos + step, n))
    while pos < n and postings[pos][0] < target:
        pos += 1
    return pos


class _HeapEntry:
    """Ranked candidate; orders so the heap top is the weakest hit.

    Score comparisons cross-multiply the exact Dice fractions; score ties
    order by canonical string so results never depend on the internal
    formula id layout.
    """

    __slots__ = ("matched", "denominator", "form_id", "canonical")

    def __init__(self, matched: int, denominator: int, form_id: int, canonical: str):
        self.matched = matched
        self.denominator = denominator
        self.form_id = form_id
        self.canonical = canonical

    def __lt__(self, other: "_HeapEntry") -> bool:
        left = self.matched * other.denominator
        right = other.matched * self.denominator
        if left != right:
            return left < right
        return self.canonical > other.canonical


def search(
    index: Index,
    plan: QueryPlan,
    k: int,
    flags: OptimizationFlags = ALL_ON,
) -> list[CandidateHit]:
    """Top-k candidates for a planned query, best first.

    Ordering is by score descending with ties broken by canonical string;
    only formulae sharing at least one (possibly wildcard-matched) tuple
    with the query are returned.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    nq = plan.query_size
    if nq == 0:
        return []

    concrete_iters = [
        _ConcreteIter(index.pl1[term.tuple_id], term.count, term.tuple_id)
        for term in plan.concrete
        if term.tuple_id is not None and index.pl1[term.tuple_id]
    ]
    # Wildcards are counted in query order regardless of scan order, so the
    # greedy allocation between competing wildcards stays deterministic.
    wildcard_iters = []
    for term in plan.wildcard:
        subs = [
            (tuple_id, index.pl1[tuple_id])
            for tuple_id in term.expansion
            if index.pl1[tuple_id]
        ]
        if subs:
            wildcard_iters.append(_WildcardIter(term.count, subs))
    if not concrete_iters and not wildcard_iters:
        return []

    concrete_scan = concrete_iters
    wildcard_scan = wildcard_iters
    if flags.large_first:
        concrete_scan = sorted(concrete_iters, key=lambda it: len(it.postings), reverse=True)
        wildcard_scan = sorted(wildcard_iters, key=_WildcardIter.total_postings, reverse=True)

    wild_budget = sum(it.count for it in wildcard_iters)
    a1 = index.a1
    canonicals = index.canonicals
    heap: list[_HeapEntry] = []
    # Latched once no wildcard-only candidate of any size can reach the
    # top-k; from then on only concrete iterators produce candidates.
    concrete_only = False

    while True:
        current = None
        for it in concrete_scan:
            head = it.head()
            if head is not None and (current is None or head < current):
                current = head
        concrete_at = current is not None
        if not concrete_only:
            for it in wildcard_scan:
                head = it.head()
                if head is not None and (current is None or head < current):
                    current = head
                    concrete_at = False
        if current is None:
            break

        nc = a1[current]
        denominator = nq + nc
        score_it = True
        if len(heap) >= k:
            kth = heap[0]
            if flags.size_threshold and not _can_reach(min(nq, nc), denominator, kth):
                # Even a perfect overlap cannot displace the k-th entry when
                # the candidate's tuple total is too small or too large.
                score_it = False
            if score_it and flags.wildcard_skip and not concrete_at:
                if not _can_reach(min(wild_budget, nc), denominator, kth):
                    score_it = False
                if not concrete_only and wild_budget and not _can_reach(
                    wild_budget, nq + wild_budget, kth
                ):
                    # Size-independent bound: no wildcard-only candidate can
                    # reach the k-th score any more.
                    concrete_only = True
                    score_it = False

        if score_it:
            matched = 0
            consumed: dict[int, int] = {}
            track = bool(wildcard_iters)
            for it in concrete_iters:
                if it.head() == current:
                    count = it.postings[it.pos][1]
                    take = count if count < it.count else it.count
                    matched += take
                    if track:
                        consumed[it.tuple_id] = take
            for it in wildcard_iters:
                remaining = it.count
                for sub_index, count in it.pop_at(current):
                    if remaining <= 0:
                        if flags.wildcard_early_stop:
                            continue  # drain remaining entries without bookkeeping
                        count = 0
                    tuple_id = it.tuple_ids[sub_index]
                    available = count - consumed.get(tuple_id, 0)
                    if available > 0:
                        take = available if available < remaining else remaining
                        remaining -= take
                        matched += take
                        consumed[tuple_id] = consumed.get(tuple_id, 0) + take
            if matched > 0:
                entry = _HeapEntry(matched, denominator, current, canonicals[current])
                if len(heap) < k:
                    heapq.heappush(heap, entry)
                elif heap[0] < entry:
                    heapq.heapreplace(heap, entry)
            _advance_concrete_past(concrete_iters, current)
        else:
            _advance_concrete_past(concrete_iters, current)
            if not concrete_only:
                for it in wildcard_iters:
                    for _ in it.pop_at(current):
                        pass
        if concrete_only:
            target = _min_head(concrete_iters)
            if target is None:
                break
            for it in wildcard_iters:
                it.seek(target, flags.galloping)

    ranked = sorted(
        heap,
        key=lambda e: (Fraction(-2 * e.matched, e.denominator), e.canonical),
    )
    return [
        CandidateHit(
            entry.form_id,
            entry.matched,
            2 * entry.matched / entry.denominator,
            list(index.pl2[entry.form_id]),
        )
        for entry in ranked
    ]


def _can_reach(matched: int, denominator: int, kth: _HeapEntry) -> bool:
    """Can ``2 * matched / denominator`` reach the k-th score (ties count)?"""
    return matched * kth.denominator >= kth.matched * denominator


def _min_head(concrete_iters: list[_ConcreteIter]) -> int | None:
    current = None
    for it in concrete_iters:
        head = it.head()
        if head is not None and (current is None or head < current):
            current = head
    return current


def _advance_concrete_past(concrete_iters: list[_ConcreteIter], form_id: int) -> None:
    for it in concrete_iters:
        if it.head() == form_id:
            it.pos += 1
