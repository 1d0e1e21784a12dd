"""Article embeddings and cosine-similarity relevance filtering.

Two interchangeable backends produce the vectors: a deterministic
hashed-bag-of-tokens stub (no model, no network) and an HTTP client for a
sentence-encoder sidecar speaking the ``POST /embed`` wire contract.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import EmbedServiceError
from .validation import check_unit_interval, check_vector

DEFAULT_DIM = 768
DEFAULT_RELEVANCE_TAU = 0.75
SERVICE_BATCH_SIZE = 64

# Index of the basis vector returned for token-free text.
_EMPTY_TEXT_SEED = 0

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Embedding:
    """A document vector tied back to its article."""

    article_id: str
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", check_vector(self.vector, name="vector"))


def stub_embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic stand-in embedding: token-count bag hashed into ``dim``
    buckets, scaled to unit norm. Texts sharing tokens get higher cosine.

    Token-free text maps to a fixed basis vector so the result is always
    unit-norm.
    """
    vec = np.zeros(dim)
    for token in _TOKEN_RE.findall(text.lower()):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest, "big") % dim] += 1.0
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[_EMPTY_TEXT_SEED % dim] = 1.0
        return vec
    return vec / norm


class StubBackend:
    """Offline embedding backend built on :func:`stub_embed`."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        return [stub_embed(t, self.dim) for t in texts]


class ServiceBackend:
    """Client for an embedding service.

    Wire contract: ``POST {url}/embed`` with ``{"texts": [...]}`` returns
    ``{"dim": D, "vectors": [[...], ...]}``; ``GET {url}/health`` returns
    ``{"status": "ok", "model": "<name>"}``. Requests are batched.
    """

    def __init__(self, url: str, expected_dim: int | None = None,
                 batch_size: int = SERVICE_BATCH_SIZE, timeout: float = 30.0,
                 session: requests.Session | None = None):
        self.url = url.rstrip("/")
        self.expected_dim = expected_dim
        self.batch_size = batch_size
        self.timeout = timeout
        self._session = session or requests.Session()
        self.dim = expected_dim

    def health(self) -> dict:
        try:
            resp = self._session.get(f"{self.url}/health", timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise EmbedServiceError(f"embedding service at {self.url} unreachable: {exc}") from exc

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        vectors: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start:start + self.batch_size]
            try:
                resp = self._session.post(
                    f"{self.url}/embed", json={"texts": batch}, timeout=self.timeout
                )
                resp.raise_for_status()
                payload = resp.json()
            except requests.RequestException as exc:
                raise EmbedServiceError(
                    f"embedding service at {self.url} unreachable: {exc}"
                ) from exc
            dim = payload.get("dim")
            got = payload.get("vectors", [])
            if len(got) != len(batch):
                raise EmbedServiceError(
                    f"service returned {len(got)} vectors for {len(batch)} texts"
                )
            if self.expected_dim is not None and dim != self.expected_dim:
                raise EmbedServiceError(
                    f"service reports dim={dim}, configured dim={self.expected_dim}"
                )
            for row in got:
                vec = np.asarray(row, dtype=float)
                if vec.shape[0] != dim:
                    raise EmbedServiceError(
                        f"vector length {vec.shape[0]} does not match reported dim {dim}"
                    )
                vectors.append(vec)
            self.dim = dim
        return vectors


def embed_articles(articles, backend) -> list[Embedding]:
    """Embed article texts (title + body), one vector per article, in order."""
    texts = [f"{a.title}\n\n{a.body}" if a.body else a.title for a in articles]
    vectors = backend.embed(texts)
    return [Embedding(a.id, v) for a, v in zip(articles, vectors)]


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors; zero-norm input is an error."""
    a = check_vector(a, name="a")
    b = check_vector(b, dim=a.shape[0], name="b")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


@dataclass
class FilterResult:
    """Outcome of relevance filtering against the event summary vector."""

    kept: list[Embedding]
    dropped: list[Embedding]
    similarities: dict[str, float] = field(default_factory=dict)

    @property
    def n_kept(self) -> int:
        return len(self.kept)

    @property
    def n_dropped(self) -> int:
        return len(self.dropped)


def relevance_filter(event_vec, embeddings: list[Embedding],
                     tau: float = DEFAULT_RELEVANCE_TAU) -> FilterResult:
    """Keep embeddings whose cosine similarity to the event vector is >= tau.

    The boundary is inclusive: similarity exactly equal to tau is kept.
    """
    tau = check_unit_interval(tau, "tau", open_left=True)
    event_vec = check_vector(event_vec, name="event_vec")
    kept, dropped, sims = [], [], {}
    for emb in embeddings:
        s = cosine_similarity(event_vec, emb.vector)
        sims[emb.article_id] = s
        (kept if s >= tau else dropped).append(emb)
    return FilterResult(kept=kept, dropped=dropped, similarities=sims)
