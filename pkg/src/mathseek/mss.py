"""Maximum subtree similarity: the second-stage re-ranking metric.

A candidate formula is scored against the query by the best pairwise
alignment of pruned subtrees.  Alignments grow from a unifying root pair
through edges whose labels match on both sides and whose endpoints unify
(variables with variables, numbers with numbers, query wildcards with
anything, everything else by exact label).  The aligned query nodes are
grouped into partitions sharing one query label and one candidate label; a
greedy selection of label-consistent partitions yields the matched set M,
which is scored by the lexicographic triple

    ( harmonic mean of matched node and edge fractions of the query,
      -(unmatched candidate nodes),
      exactly-matching node count )

The harmonic component is kept as an exact integer fraction so triple
comparisons never suffer float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Mapping, Sequence

from .slt import (
    Slt,
    UNIFY_LITERAL,
    UNIFY_NUMBER,
    UNIFY_VARIABLE,
    UNIFY_WILDCARD,
    unification_class,
)

__all__ = [
    "ScoreTriple",
    "AlignmentPartition",
    "MssResult",
    "unifies",
    "maximally_similar_subtree",
    "alignment_partitions",
    "greedy_matched_set",
    "score",
    "mss",
]


@dataclass(frozen=True)
class ScoreTriple:
    """Lexicographically compared match score; larger is better."""

    h_num: int
    h_den: int
    neg_unmatched: int
    exact: int

    @property
    def h(self) -> float:
        return self.h_num / self.h_den

    def _h_cmp(self, other: "ScoreTriple") -> int:
        left = self.h_num * other.h_den
        right = other.h_num * self.h_den
        return (left > right) - (left < right)

    def __lt__(self, other: "ScoreTriple") -> bool:
        cmp = self._h_cmp(other)
        if cmp != 0:
            return cmp < 0
        if self.neg_unmatched != other.neg_unmatched:
            return self.neg_unmatched < other.neg_unmatched
        return self.exact < other.exact

    def __le__(self, other: "ScoreTriple") -> bool:
        return not other < self

    def __gt__(self, other: "ScoreTriple") -> bool:
        return other < self

    def __ge__(self, other: "ScoreTriple") -> bool:
        return not self < other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreTriple):
            return NotImplemented
        return (
            self._h_cmp(other) == 0
            and self.neg_unmatched == other.neg_unmatched
            and self.exact == other.exact
        )

    def __hash__(self) -> int:
        return hash((self.h_num, self.h_den, self.neg_unmatched, self.exact))

    def to_json(self) -> dict:
        return {"h": self.h, "negUnmatched": self.neg_unmatched, "exact": self.exact}

    @staticmethod
    def from_parts(h_num: int, h_den: int, neg_unmatched: int, exact: int) -> "ScoreTriple":
        divisor = gcd(h_num, h_den) or 1
        return ScoreTriple(h_num // divisor, h_den // divisor, neg_unmatched, exact)


@dataclass(frozen=True)
class AlignmentPartition:
    """Aligned query nodes sharing one query label and one candidate label."""

    nodes: tuple[int, ...]  # ascending pre-order ids
    query_label: str
    candidate_label: str

    @property
    def exact(self) -> bool:
        return self.query_label == self.candidate_label


@dataclass(frozen=True)
class MssResult:
    triple: ScoreTriple
    matched: tuple[int, ...]  # query node ids in M, ascending
    image: dict[int, int]  # f restricted to M
    alignment: dict[int, int]  # the full aligned subtree pair


def unifies(query_label: str, candidate_label: str) -> bool:
    """Node unification: the query side may generalize, never the candidate.

    Variables unify with variables, numbers with numbers, a query wildcard
    with anything; all other labels must match exactly (matrix fences
    included).
    """
    kind = unification_class(query_label)
    if kind == UNIFY_WILDCARD:
        return True
    other = unification_class(candidate_label)
    if kind == UNIFY_VARIABLE or kind == UNIFY_NUMBER:
        return other == kind
    return query_label == candidate_label


class _PairTable:
    """Per tree pair: alignment links between all unifying node pairs.

    ``children[(q, c)]`` lists the child pairs reached over same-labeled
    edges whose endpoints unify; ``sizes[(q, c)]`` is the node count of the
    alignment rooted at the pair.  Built bottom-up, iteratively.
    """

    __slots__ = ("children", "sizes")

    def __init__(self, tq: Slt, tc: Slt):
        q_classes = [unification_class(label) for label in tq.labels]
        self.children: dict[tuple[int, int], list[tuple[int, int]]] = {}
        self.sizes: dict[tuple[int, int], int] = {}
        sizes = self.sizes
        children = self.children
        tc_labels = tc.labels
        tc_children = tc.children
        tc_range = range(tc.size)
        for q in range(tq.size - 1, -1, -1):
            q_label = tq.labels[q]
            kind = q_classes[q]
            q_kids = tq.children[q]
            for c in tc_range:
                c_label = tc_labels[c]
                if kind == UNIFY_WILDCARD:
                    pass
                elif kind == UNIFY_LITERAL:
                    if q_label != c_label:
                        continue
                elif kind != unification_class(c_label):
                    continue
                linked: list[tuple[int, int]] = []
                total = 1
                if q_kids:
                    c_kids = tc_children[c]
                    for edge, q_child in q_kids.items():
                        c_child = c_kids.get(edge)
                        if c_child is not None:
                            pair = (q_child, c_child)
                            pair_size = sizes.get(pair)
                            if pair_size is not None:
                                linked.append(pair)
                                total += pair_size
                children[(q, c)] = linked
                sizes[(q, c)] = total

    def collect(self, rq: int, rc: int) -> dict[int, int]:
        alignment: dict[int, int] = {}
        stack = [(rq, rc)]
        children = self.children
        while stack:
            pair = stack.pop()
            alignment[pair[0]] = pair[1]
            stack.extend(children[pair])
        return alignment


def maximally_similar_subtree(
    tq: Slt, tc: Slt, rq: int, rc: int
) -> tuple[dict[int, int], int] | None:
    """Largest alignment rooted at ``(rq, rc)``, or ``None`` if the roots
    do not unify.

    Returns the alignment as a query-to-candidate node map together with its
    unified-node count (every aligned node unifies with its image).
    """
    table = _PairTable(tq, tc)
    if (rq, rc) not in table.sizes:
        return None
    alignment = table.collect(rq, rc)
    return alignment, len(alignment)


def alignment_partitions(tq: Slt, tc: Slt, alignment: Mapping[int, int]) -> list[AlignmentPartition]:
    """Group aligned query nodes by (query label, candidate label)."""
    groups: dict[tuple[str, str], list[int]] = {}
    for q in sorted(alignment):
        key = (tq.labels[q], tc.labels[alignment[q]])
        groups.setdefault(key, []).append(q)
    return [
        AlignmentPartition(tuple(nodes), q_label, c_label)
        for (q_label, c_label), nodes in groups.items()
    ]


def greedy_matched_set(partitions: Iterable[AlignmentPartition]) -> list[AlignmentPartition]:
    """Select label-consistent partitions, largest first.

    Ties prefer partitions whose two labels match exactly, then the one
    containing the smallest pre-order node id.  A selected partition claims
    both of its labels; later partitions reusing either label are skipped.
    """
    order = sorted(
        partitions, key=lambda p: (-len(p.nodes), not p.exact, p.nodes[0])
    )
    used_query: set[str] = set()
    used_candidate: set[str] = set()
    chosen: list[AlignmentPartition] = []
    for partition in order:
        if partition.query_label in used_query or partition.candidate_label in used_candidate:
            continue
        chosen.append(partition)
        used_query.add(partition.query_label)
        used_candidate.add(partition.candidate_label)
    return chosen


def score(
    tq: Slt, tc: Slt, matched: Sequence[int], image: Mapping[int, int]
) -> ScoreTriple:
    """Score a matched set of query nodes against candidate tree ``tc``.

    The harmonic component uses ``max(|E(M)|, 0.5)`` so single-node matches
    stay comparable; with an empty matched set it is zero.
    """
    m = len(matched)
    if m == 0:
        return ScoreTriple.from_parts(0, 1, -tc.size, 0)
    matched_set = set(matched)
    edges = 0
    for q in matched_set:
        for child in tq.children[q].values():
            if child in matched_set:
                edges += 1
    exact = sum(1 for q in matched_set if tq.labels[q] == tc.labels[image[q]])
    tq_size = tq.size
    edges2 = max(2 * edges, 1)  # twice max(|E(M)|, 0.5), kept integral
    h_num = 2 * m * edges2
    h_den = tq_size * edges2 + 2 * (tq_size - 1) * m
    return ScoreTriple.from_parts(h_num, h_den, m - tc.size, exact)


def mss(tq: Slt, tc: Slt) -> MssResult:
    """Maximum subtree similarity of candidate ``tc`` with respect to ``tq``.

    Maximizes the score triple over all unifying root pairs; the returned
    matched set drives highlighting (exact / unified / unmatched).
    """
    table = _PairTable(tq, tc)
    best_triple = ScoreTriple.from_parts(0, 1, -tc.size, 0)
    best_matched: tuple[int, ...] = ()
    best_image: dict[int, int] = {}
    best_alignment: dict[int, int] = {}
    tq_size = tq.size
    for pair, size in table.sizes.items():
        # Upper bound with every aligned node matched and fully connected;
        # strictly worse bounds cannot improve the running best.
        edges2 = max(2 * (size - 1), 1)
        ub_num = 2 * size * edges2
        ub_den = tq_size * edges2 + 2 * (tq_size - 1) * size
        if ub_num * best_triple.h_den < best_triple.h_num * ub_den:
            continue
        alignment = table.collect(*pair)
        partitions = alignment_partitions(tq, tc, alignment)
        chosen = greedy_matched_set(partitions)
        matched = tuple(sorted(n for p in chosen for n in p.nodes))
        image = {q: alignment[q] for q in matched}
        triple = score(tq, tc, matched, image)
        if triple > best_triple:
            best_triple = triple
            best_matched = matched
            best_image = image
            best_alignment = alignment
    return MssResult(best_triple, best_matched, best_image, best_alignment)
