"""Text encoders the sidecar can serve.

Two backends are supported, selected by the model name:

* ``hash:<dim>`` uses :class:`HashEncoder`, a dependency-free hashed
  bag-of-words embedding. It needs no downloads and is fully
  deterministic, which makes it the right backend for tests and for
  environments without model weights.
* any other name is treated as a sentence-transformers model id and
  loaded lazily by :class:`SbertEncoder`.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MODEL = "sentence-transformers/all-mpnet-base-v2"

_TOKEN_RE = re.compile(r"[a-z0-9']+")


class EncoderError(RuntimeError):
    """Raised when an encoder cannot be constructed or loaded."""


@dataclass
class HashEncoder:
    """Deterministic hashed bag-of-words embedding.

    Each token is hashed to a bucket and a sign; a text embeds as the
    L2-normalized signed bucket counts. Token overlap therefore drives
    cosine similarity, which is all the wire-contract tests need.
    """

    dim: int

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise EncoderError(f"hash encoder dim must be positive, got {self.dim}")

    @property
    def name(self) -> str:
        return f"hash:{self.dim}"

    def _embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([self._embed_one(text) for text in texts])


def _load_sbert(model_name: str):
    """Import and instantiate a sentence-transformers model.

    Kept as a module-level function so tests can substitute it without
    paying the import cost of the real library.
    """
    from sentence_transformers import SentenceTransformer

    return SentenceTransformer(model_name)


@dataclass
class SbertEncoder:
    """Wrapper around a sentence-transformers model.

    The model is loaded eagerly in ``__init__`` so a bad model name
    fails at startup rather than on the first request. Inference is
    serialized with a lock; the underlying model batches internally.
    """

    model_name: str
    _model: object = field(init=False, repr=False)
    _dim: int = field(init=False)
    _lock: threading.Lock = field(init=False, repr=False)

    def __post_init__(self) -> None:
        try:
            self._model = _load_sbert(self.model_name)
        except Exception as exc:
            raise EncoderError(f"cannot load model {self.model_name!r}: {exc}") from exc
        dim = self._model.get_sentence_embedding_dimension()
        if not dim or dim <= 0:
            raise EncoderError(f"model {self.model_name!r} reports no embedding dimension")
        self._dim = int(dim)
        self._lock = threading.Lock()
        self._model.eval()

    @property
    def name(self) -> str:
        return self.model_name

    @property
    def dim(self) -> int:
        return self._dim

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self._dim), dtype=np.float64)
        with self._lock:
            vectors = self._model.encode(
                list(texts),
                convert_to_numpy=True,
                show_progress_bar=False,
            )
        return np.asarray(vectors, dtype=np.float64)


def make_encoder(model_name: str):
    """Build the encoder named by ``model_name``.

    ``hash:<dim>`` selects the hashed bag-of-words backend; anything
    else is passed to sentence-transformers. Raises EncoderError when
    the name is malformed or the model cannot be loaded.
    """
    if model_name.startswith("hash:"):
        spec = model_name[len("hash:"):]
        try:
            dim = int(spec)
        except ValueError:
            raise EncoderError(f"bad hash encoder spec {model_name!r}: dim must be an integer")
        return HashEncoder(dim=dim)
    return SbertEncoder(model_name=model_name)
