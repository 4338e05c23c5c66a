"""Shared fixtures: reference formulae and corpus builders."""

from __future__ import annotations

import random

import pytest

from mathseek.index import CorpusRecord, build_index

# The running example: pi_i = 2^{?x0} * binom(N, i), with the binomial
# encoded as a parenthesized two-row table.
EXAMPLE_QUERY_MATHML = (
    "<math>"
    "<msub><mi>&#x3C0;</mi><mi>i</mi></msub>"
    "<mo>=</mo>"
    "<msup><mn>2</mn><mi>?x0</mi></msup>"
    "<mrow><mo>(</mo>"
    "<mtable><mtr><mtd><mi>N</mi></mtd></mtr><mtr><mtd><mi>i</mi></mtd></mtr></mtable>"
    "<mo>)</mo></mrow>"
    "</math>"
)

EXAMPLE_QUERY_CANONICAL = "[V!π[n:=[n:N!2[n:M!()2x1[w:V!N[e:V!i]]][a:?x0]]][b:V!i]]"


def mml(*body: str) -> str:
    return f"<math>{''.join(body)}</math>"


def mi(text: str) -> str:
    return f"<mi>{text}</mi>"


def mn(text: str) -> str:
    return f"<mn>{text}</mn>"


def mo(text: str) -> str:
    return f"<mo>{text}</mo>"


@pytest.fixture(scope="session")
def tiny_index():
    """Three small formulae across two documents, window 1, no EOL."""
    corpus = [
        CorpusRecord("doc-a", [(0, mml(mi("a"), mo("+"), mi("b")))]),
        CorpusRecord(
            "doc-b",
            [(0, mml(mi("a"), mo("+"), mi("c"))), (3, mml(mi("x"), mo("-"), mi("y")))],
        ),
    ]
    return build_index(corpus, 1, False)


@pytest.fixture()
def rng():
    return random.Random(0xC0FFEE)
