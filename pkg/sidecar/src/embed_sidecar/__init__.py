"""Embedding sidecar: a small HTTP service that turns texts into vectors.

The service exposes two endpoints:

* ``POST /embed`` with body ``{"texts": [...]}`` returns
  ``{"dim": N, "vectors": [[...], ...]}`` where every vector has length
  ``dim`` and the i-th vector embeds the i-th text.
* ``GET /health`` returns ``{"status": "ok", "model": "<name>"}``.

Clients should read ``dim`` from the response rather than assuming a
particular model geometry.
"""

from embed_sidecar.encoders import (
    DEFAULT_MODEL,
    EncoderError,
    HashEncoder,
    SbertEncoder,
    make_encoder,
)
from embed_sidecar.service import create_app, run_app

__all__ = [
    "DEFAULT_MODEL",
    "EncoderError",
    "HashEncoder",
    "SbertEncoder",
    "create_app",
    "make_encoder",
    "run_app",
]
