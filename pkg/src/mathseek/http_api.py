"""HTTP API and static file serving for the query web UI.

The server holds one immutable index and answers concurrently; requests are
independent.  Endpoints:

    GET /api/search?q=<mathml>&k=<int>&rerank=<bool>&by=<formula|doc>
    GET /api/health

Anything else is served from the optional static directory (the web UI
bundle).  Query parse failures map to 400; a missing index maps to 503.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .index import Index
from .mathml import MathMLError
from .service import run_query

logger = logging.getLogger(__name__)

_FALLBACK_PAGE = b"""<!doctype html>
<html><head><title>formula search</title></head>
<body><p>The search API is running. Endpoints: <code>/api/search</code>,
<code>/api/health</code>. No web UI bundle is configured.</p></body></html>
"""

_TRUE_VALUES = {"1", "true", "yes", "on"}
_FALSE_VALUES = {"0", "false", "no", "off"}


class SearchServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], index: Index | None, static_dir: str | None):
        super().__init__(address, _Handler)
        self.index = index
        self.static_root = Path(static_dir).resolve() if static_dir else None


class _Handler(BaseHTTPRequestHandler):
    server: SearchServer

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        logger.debug("%s %s", self.address_string(), format % args)

    def do_GET(self) -> None:  # noqa: N802
        url = urlsplit(self.path)
        if url.path == "/api/health":
            self._health()
        elif url.path == "/api/search":
            self._search(parse_qs(url.query))
        else:
            self._static(url.path)

    def _health(self) -> None:
        index = self.server.index
        if index is None:
            self._send_json(503, {"error": "index not loaded"})
            return
        self._send_json(
            200,
            {
                "status": "ok",
                "formulae": index.formula_count,
                "w": index.window,
                "eol": index.eol,
            },
        )

    def _search(self, params: dict[str, list[str]]) -> None:
        index = self.server.index
        if index is None:
            self._send_json(503, {"error": "index not loaded"})
            return
        query = params.get("q", [None])[0]
        if not query:
            self._send_json(400, {"error": "missing required parameter: q"})
            return
        try:
            k = int(params.get("k", ["100"])[0])
            if k < 1:
                raise ValueError
        except ValueError:
            self._send_json(400, {"error": "k must be a positive integer"})
            return
        rerank_raw = params.get("rerank", ["true"])[0].lower()
        if rerank_raw in _TRUE_VALUES:
            rerank = True
        elif rerank_raw in _FALSE_VALUES:
            rerank = False
        else:
            self._send_json(400, {"error": "rerank must be a boolean"})
            return
        by = params.get("by", ["formula"])[0]
        if by not in ("formula", "doc"):
            self._send_json(400, {"error": "by must be 'formula' or 'doc'"})
            return
        try:
            response = run_query(index, query, k=k, rerank=rerank)
        except MathMLError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, response.to_json_dict())

    def _static(self, path: str) -> None:
        root = self.server.static_root
        if root is None:
            if path in ("/", "/index.html"):
                self._send_bytes(200, _FALLBACK_PAGE, "text/html; charset=utf-8")
            else:
                self._send_json(404, {"error": "not found"})
            return
        relative = path.lstrip("/") or "index.html"
        target = (root / relative).resolve()
        if root not in target.parents and target != root:
            self._send_json(404, {"error": "not found"})
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        if content_type.startswith("text/") or content_type == "application/javascript":
            content_type += "; charset=utf-8"
        self._send_bytes(200, target.read_bytes(), content_type)

    def _send_json(self, status: int, payload: dict) -> None:
        self._send_bytes(
            status, json.dumps(payload).encode("utf-8"), "application/json; charset=utf-8"
        )

    def _send_bytes(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def create_server(
    index: Index | None,
    host: str = "127.0.0.1",
    port: int = 8080,
    static_dir: str | None = None,
) -> SearchServer:
    return SearchServer((host, port), index, static_dir)


def serve_in_background(server: SearchServer) -> threading.Thread:
    """Start the server loop on a daemon thread (used by tests)."""
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
