"""FastAPI application for the embedding sidecar."""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager

import uvicorn
from fastapi import FastAPI
from pydantic import BaseModel


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(encoder) -> FastAPI:
    """Build the sidecar app around an already-constructed encoder.

    Requests are serialized through a lock so concurrent clients cannot
    interleave inference on a backend that is not thread safe.
    """
    app = FastAPI(title="embed-sidecar", docs_url=None, redoc_url=None)
    lock = threading.Lock()

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "model": encoder.name}

    @app.post("/embed")
    def embed(request: EmbedRequest) -> dict:
        with lock:
            vectors = encoder.encode(request.texts)
        return {"dim": int(encoder.dim), "vectors": [list(map(float, row)) for row in vectors]}

    return app


@contextmanager
def run_app(app: FastAPI, host: str = "127.0.0.1", port: int = 0):
    """Serve ``app`` in a background thread, yielding its base URL.

    With ``port=0`` the OS picks a free port; the yielded URL carries
    the bound port. Intended for tests and embedding into other
    processes; production use goes through the CLI.
    """
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    while not server.started:
        if not thread.is_alive():
            raise RuntimeError("sidecar server thread exited before startup")
        if time.monotonic() > deadline:
            server.should_exit = True
            raise RuntimeError("sidecar server did not start within 15s")
        time.sleep(0.01)
    bound_port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://{host}:{bound_port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5.0)
