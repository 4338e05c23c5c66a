"""Symbol layout tree model: typing, canonical form, invariants."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXAMPLE_QUERY_CANONICAL, EXAMPLE_QUERY_MATHML
from generators import gen_slt
from mathseek.slt import (
    MATRIX,
    OPERATOR,
    SymbolType,
    Slt,
    VARIABLE,
    WILDCARD,
    node_type,
)
from mathseek.mathml import parse_mathml

import random


class TestNodeType:
    def test_variable(self):
        assert node_type("V!x") == SymbolType(VARIABLE)

    def test_matrix_strips_fences(self):
        assert node_type("M![]2x3") == SymbolType(MATRIX, 2, 3)
        assert node_type("M!2x3") == SymbolType(MATRIX, 2, 3)
        assert node_type("M!()2x1") == node_type("M![]2x1")

    def test_operator_has_no_bang(self):
        assert node_type("+") == SymbolType(OPERATOR)

    def test_factorial_is_operator(self):
        assert node_type("!") == SymbolType(OPERATOR)

    def test_wildcard(self):
        assert node_type("?x0") == SymbolType(WILDCARD)

    def test_reserved_terminal_rejected(self):
        with pytest.raises(ValueError):
            node_type("!0")

    def test_stable_across_fence_variants(self):
        assert node_type("M!()2x1") == SymbolType(MATRIX, 2, 1)
        assert node_type("M!()2x1") == node_type("M!{}2x1")


class TestCanonical:
    def test_single_node(self):
        tree = Slt.from_nested(("V!x", {}))
        assert tree.canonical() == "[V!x]"

    def test_chain(self):
        tree = Slt.from_nested(("V!a", {"n": ("+", {"n": ("V!b", {})})}))
        assert tree.canonical() == "[V!a[n:+[n:V!b]]]"

    def test_round_trip_example_query(self):
        tree = parse_mathml(EXAMPLE_QUERY_MATHML)
        text = tree.canonical()
        assert text == EXAMPLE_QUERY_CANONICAL
        assert Slt.from_canonical(text) == tree

    def test_escaping(self):
        tree = Slt.from_nested(("[", {"n": ("\\", {"n": ("]", {})})}))
        assert Slt.from_canonical(tree.canonical()) == tree

    def test_rejects_garbage(self):
        for bad in ("", "[", "[]", "[V!x", "[V!x]extra", "[V!x[q:V!y]]"):
            with pytest.raises(ValueError):
                Slt.from_canonical(bad)

    def test_rejects_duplicate_edges(self):
        with pytest.raises(ValueError):
            Slt.from_nested(("V!x", {"q": ("V!y", {})}))

    @settings(deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), size=st.integers(1, 20))
    def test_round_trip_random(self, seed, size):
        tree = gen_slt(random.Random(seed), size)
        tree.validate()
        assert Slt.from_canonical(tree.canonical()) == tree

    def test_deep_chain_is_fine(self):
        nested = ("V!x", {})
        for _ in range(5000):
            nested = ("V!y", {"n": nested})
        tree = Slt.from_nested(nested)
        assert tree.size == 5001
        assert Slt.from_canonical(tree.canonical()) == tree


class TestStructure:
    def test_preorder_ids(self):
        tree = parse_mathml(EXAMPLE_QUERY_MATHML)
        assert tree.labels[0] == "V!π"
        assert tree.size == 8
        parents = tree.parents()
        assert parents[0] == (-1, "")
        roots = [i for i, (p, _) in enumerate(parents) if p == -1]
        assert roots == [0]

    def test_no_duplicate_edge_labels(self):
        tree = parse_mathml(EXAMPLE_QUERY_MATHML)
        for kids in tree.children:
            assert len(set(kids)) == len(kids)
