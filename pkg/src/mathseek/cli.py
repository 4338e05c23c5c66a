"""Command line interface: build indexes, run queries, serve the API.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .index import (
    BuildStats,
    ChecksumMismatchError,
    EmptyCorpusError,
    FormatVersionMismatchError,
    Index,
    build_index,
    iter_html_corpus,
    iter_jsonl_corpus,
)
from .http_api import create_server
from .mathml import MathMLError
from .service import run_query

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _window_value(text: str) -> int | None:
    if text.lower() == "all":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be a positive integer or 'all': {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("window must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mathseek", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mathseek {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_index = sub.add_parser("index", help="build an index from a corpus")
    p_index.add_argument("--input", required=True, help="JSONL corpus file or HTML directory")
    p_index.add_argument("--out", required=True, help="output index file")
    p_index.add_argument(
        "--window", type=_window_value, default=None,
        help="max edge distance between paired symbols, or 'all' (default)",
    )
    p_index.add_argument("--eol", action="store_true", help="index end-of-line tuples")

    p_query = sub.add_parser("query", help="query an index")
    p_query.add_argument("--index", required=True, help="index file")
    p_query.add_argument("--query", required=True, help="query MathML, or @file to read it")
    p_query.add_argument("--k", type=int, default=100, help="results to return (default 100)")
    p_query.add_argument("--no-rerank", action="store_true", help="skip subtree re-ranking")
    fmt = p_query.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit the full JSON response")
    fmt.add_argument("--text", action="store_true", help="emit a plain-text listing (default)")
    p_query.add_argument("--by-doc", action="store_true", help="list documents instead of formulae")
    p_query.add_argument(
        "--window", type=_window_value, default=None,
        help="expected window size; warns when the index differs",
    )
    p_query.add_argument("--eol", action="store_true", help="expected end-of-line setting")

    p_serve = sub.add_parser("serve", help="serve the HTTP API and web UI")
    p_serve.add_argument("--index", required=True, help="index file")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--static", default=None, help="directory with the web UI bundle")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        if args.command == "index":
            return _cmd_index(args)
        if args.command == "query":
            return _cmd_query(args)
        return _cmd_serve(args)
    except (EmptyCorpusError, FormatVersionMismatchError, ChecksumMismatchError, MathMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def _cmd_index(args: argparse.Namespace) -> int:
    source = Path(args.input)
    stats = BuildStats()
    if source.is_dir():
        corpus = iter_html_corpus(source)
    else:
        corpus = iter_jsonl_corpus(source, stats)
    index = build_index(corpus, args.window, args.eol, stats=stats)
    index.save(args.out)
    window_text = "all" if index.window is None else str(index.window)
    print(
        f"indexed {index.formula_count} distinct formulae "
        f"({stats.formulae_seen} seen, {stats.parse_failures} unparseable) "
        f"from {index.doc_count} documents; "
        f"{stats.skipped_records} malformed records skipped; "
        f"window={window_text} eol={'on' if index.eol else 'off'} -> {args.out}"
    )
    return 0


def _load_query_text(spec: str) -> str:
    if spec.startswith("@"):
        return Path(spec[1:]).read_text(encoding="utf-8")
    return spec


def _cmd_query(args: argparse.Namespace) -> int:
    index = Index.load(args.index)
    if args.window is not None and args.window != index.window:
        logger.warning(
            "requested window %s differs from index window %s; using the index setting",
            args.window, "all" if index.window is None else index.window,
        )
    if args.eol and not index.eol:
        logger.warning("requested eol tuples but the index was built without them")
    if args.k < 1:
        print("error: --k must be >= 1", file=sys.stderr)
        return USAGE_ERROR
    query_text = _load_query_text(args.query)
    response = run_query(index, query_text, k=args.k, rerank=not args.no_rerank)
    if args.json:
        json.dump(response.to_json_dict(), sys.stdout, indent=2)
        print()
        return 0
    print(f"query: {response.query}")
    print(f"core: {response.core_ms:.1f} ms, rerank: {response.rerank_ms:.1f} ms")
    if args.by_doc:
        for rank, doc in enumerate(response.documents, start=1):
            triple = doc.best_triple
            score_text = (
                f"h={triple.h:.4f} unmatched={-triple.neg_unmatched} exact={triple.exact}"
                if triple
                else f"dice={doc.best_dice:.4f}"
            )
            print(f"{rank:4d}. {doc.name}  [{score_text}, {doc.hit_count} hits]")
        return 0
    rank = 0
    for group in response.groups:
        print(f"group {group.structure_key}")
        for hit in group.hits:
            rank += 1
            triple = hit.triple
            score_text = (
                f"h={triple.h:.4f} unmatched={-triple.neg_unmatched} exact={triple.exact}"
                if triple
                else ""
            )
            docs_text = ", ".join(f"{name}@{pos}" for name, pos in hit.docs)
            print(f"{rank:4d}. dice={hit.dice:.4f} {score_text} {hit.canonical}  [{docs_text}]")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    index = Index.load(args.index)
    server = create_server(index, args.host, args.port, args.static)
    window_text = "all" if index.window is None else str(index.window)
    print(
        f"serving {index.formula_count} formulae (window={window_text}, "
        f"eol={'on' if index.eol else 'off'}) on http://{args.host}:{args.port}/"
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
