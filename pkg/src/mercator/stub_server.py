"""Local HTTP server speaking the embedding wire contract.

Backs the service-mode code paths in tests and demos without a real
sentence-encoder: vectors come from the deterministic stub backend.
"""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .embedding import DEFAULT_DIM, StubBackend

MODEL_NAME = "hashed-bag-stub"


def _make_handler(backend: StubBackend):
    class Handler(BaseHTTPRequestHandler):
        def _send(self, code: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/health":
                self._send(200, {"status": "ok", "model": MODEL_NAME})
            else:
                self._send(404, {"error": f"unknown path {self.path}"})

        def do_POST(self):
            if self.path != "/embed":
                self._send(404, {"error": f"unknown path {self.path}"})
                return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                request = json.loads(self.rfile.read(length) or b"{}")
                texts = request["texts"]
                if not isinstance(texts, list):
                    raise TypeError("texts must be a list")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                self._send(400, {"error": str(exc)})
                return
            vectors = [v.tolist() for v in backend.embed([str(t) for t in texts])]
            self._send(200, {"dim": backend.dim, "vectors": vectors})

        def log_message(self, *args):  # quiet test output
            pass

    return Handler


def make_server(dim: int = DEFAULT_DIM, port: int = 0) -> ThreadingHTTPServer:
    """Bind a server on localhost; port 0 picks a free port."""
    return ThreadingHTTPServer(("127.0.0.1", port), _make_handler(StubBackend(dim)))


@contextmanager
def run_stub_server(dim: int = DEFAULT_DIM, port: int = 0):
    """Run the server on a background thread, yielding its base URL."""
    server = make_server(dim, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
