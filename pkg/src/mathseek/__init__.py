"""Two-stage math formula search.

Formulae are parsed from Presentation MathML into symbol layout trees,
indexed as bags of symbol-pair tuples, retrieved by Dice's coefficient over
an inverted index, and re-ranked by maximum subtree similarity.
"""

from .core import ALL_OFF, ALL_ON, CandidateHit, OptimizationFlags, plan_query, search
from .index import (
    CorpusRecord,
    EmptyCorpusError,
    Index,
    build_index,
    iter_html_corpus,
    iter_jsonl_corpus,
    reorder_formula_ids,
)
from .mathml import (
    EmptyFormulaError,
    MalformedInputError,
    MathMLError,
    UnsupportedElementError,
    parse_mathml,
)
from .mss import MssResult, ScoreTriple, mss
from .service import SearchResponse, run_query
from .slt import EDGE_LABELS, EOL_SYMBOL, Slt, SymbolType, node_type
from .tuples import SymbolTuple, classify_query_tuple, extract_tuples

__version__ = "0.1.0"

__all__ = [
    "ALL_OFF",
    "ALL_ON",
    "CandidateHit",
    "CorpusRecord",
    "EDGE_LABELS",
    "EOL_SYMBOL",
    "EmptyCorpusError",
    "EmptyFormulaError",
    "Index",
    "MalformedInputError",
    "MathMLError",
    "MssResult",
    "OptimizationFlags",
    "ScoreTriple",
    "SearchResponse",
    "Slt",
    "SymbolTuple",
    "SymbolType",
    "UnsupportedElementError",
    "build_index",
    "classify_query_tuple",
    "extract_tuples",
    "iter_html_corpus",
    "iter_jsonl_corpus",
    "mss",
    "node_type",
    "parse_mathml",
    "plan_query",
    "reorder_formula_ids",
    "run_query",
    "search",
    "__version__",
]
