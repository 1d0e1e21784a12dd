import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mercator.embedding import (DEFAULT_DIM, Embedding, ServiceBackend,
                                StubBackend, cosine_similarity, embed_articles,
                                relevance_filter, stub_embed)
from mercator.errors import EmbedServiceError
from mercator.stub_server import run_stub_server


class TestStubEmbed:
    def test_unit_norm_and_dim(self):
        v = stub_embed("a")
        assert v.shape == (DEFAULT_DIM,)
        assert math.isclose(np.linalg.norm(v), 1.0, abs_tol=1e-12)

    def test_deterministic(self):
        assert np.array_equal(stub_embed("tariff EU"), stub_embed("tariff EU"))

    def test_empty_text_is_fixed_basis_vector(self):
        v = stub_embed("", dim=16)
        expected = np.zeros(16)
        expected[0] = 1.0
        assert np.array_equal(v, expected)

    def test_token_overlap_orders_similarity(self):
        a = stub_embed("tariff tariff EU")
        b = stub_embed("tariff EU")
        c = stub_embed("weather")
        assert cosine_similarity(a, b) > cosine_similarity(b, c)

    def test_case_and_punctuation_insensitive(self):
        assert np.array_equal(stub_embed("Tariff, EU!"), stub_embed("tariff eu"))


class TestCosine:
    def test_self_similarity_is_one(self):
        v = stub_embed("anything")
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_is_zero(self):
        a = np.zeros(4)
        b = np.zeros(4)
        a[0] = 1.0
        b[1] = 1.0
        assert cosine_similarity(a, b) == 0.0

    def test_hand_value(self):
        # (1,1,0)·(1,0,0) / (sqrt(2)*1) = 1/sqrt(2)
        a = np.array([1.0, 1.0, 0.0])
        b = np.array([1.0, 0.0, 0.0])
        assert cosine_similarity(a, b) == pytest.approx(1 / math.sqrt(2),
                                                        abs=1e-12)

    def test_zero_norm_is_an_error(self):
        with pytest.raises(ValueError):
            cosine_similarity(np.zeros(3), np.ones(3))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
           st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3))
    def test_symmetric_and_bounded(self, xs, ys):
        a, b = np.array(xs), np.array(ys)
        if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
            return
        s = cosine_similarity(a, b)
        assert s == cosine_similarity(b, a)
        assert abs(s) <= 1 + 1e-12

    @given(st.floats(1e-3, 1e3))
    def test_scale_invariance(self, c):
        a = stub_embed("scale test", dim=8)
        assert cosine_similarity(a, c * a) == pytest.approx(1.0, abs=1e-9)


class TestRelevanceFilter:
    @staticmethod
    def _unit(x, y):
        v = np.array([x, y, 0.0])
        return v / np.linalg.norm(v)

    def test_boundary_is_inclusive(self):
        event = np.array([1.0, 0.0, 0.0])
        high = Embedding("high", self._unit(0.8, 0.6))
        low = Embedding("low", self._unit(0.74, math.sqrt(1 - 0.74 ** 2)))
        edge_vec = self._unit(0.75, math.sqrt(1 - 0.75 ** 2))
        # tau is the exact computed similarity, so "edge" sits on the line.
        tau = cosine_similarity(event, edge_vec)
        assert tau == pytest.approx(0.75, abs=1e-09)
        result = relevance_filter(event, [high, low, Embedding("edge", edge_vec)],
                                  tau=tau)
        assert [e.article_id for e in result.kept] == ["high", "edge"]
        assert [e.article_id for e in result.dropped] == ["low"]
        assert result.n_kept == 2 and result.n_dropped == 1

    def test_tiny_tau_keeps_everything(self):
        event = stub_embed("topic words here")
        embs = [Embedding(str(i), stub_embed(f"topic words here plus {i}"))
                for i in range(5)]
        result = relevance_filter(event, embs, tau=1e-9)
        assert result.n_kept == 5

    def test_monotone_in_tau(self):
        event = stub_embed("alpha beta gamma delta")
        embs = [Embedding(str(i), stub_embed(f"alpha beta {'gamma ' * i}"))
                for i in range(6)]
        kept = [relevance_filter(event, embs, tau=t).n_kept
                for t in (0.2, 0.5, 0.8)]
        assert kept == sorted(kept, reverse=True)

    def test_output_is_a_subset(self):
        event = stub_embed("one two three")
        embs = [Embedding(str(i), stub_embed(f"one two {i}")) for i in range(4)]
        result = relevance_filter(event, embs, tau=0.5)
        assert set(map(id, result.kept)) <= set(map(id, embs))
        assert result.n_kept + result.n_dropped == len(embs)


class TestBackends:
    def test_stub_backend_order_preserving(self):
        backend = StubBackend(dim=32)
        texts = ["first", "second", "third"]
        vectors = backend.embed(texts)
        assert len(vectors) == 3
        for text, vec in zip(texts, vectors):
            assert np.array_equal(vec, stub_embed(text, dim=32))

    def test_embed_articles_uses_title_and_body(self, article_factory):
        articles = [article_factory(0, title="tariff news", body="EU detail")]
        [emb] = embed_articles(articles, StubBackend(dim=16))
        assert emb.article_id == articles[0].id
        assert np.array_equal(emb.vector, stub_embed("tariff news\n\nEU detail",
                                                     dim=16))

    def test_service_backend_round_trip(self):
        with run_stub_server(dim=16) as url:
            backend = ServiceBackend(url, expected_dim=16)
            health = backend.health()
            assert health["status"] == "ok"
            vecs = backend.embed(["a", "b", "a"])
            assert len(vecs) == 3
            assert all(v.shape == (16,) for v in vecs)
            assert cosine_similarity(vecs[0], vecs[2]) == pytest.approx(
                1.0, abs=1e-6)

    def test_service_backend_batches_large_requests(self):
        with run_stub_server(dim=8) as url:
            backend = ServiceBackend(url, expected_dim=8)
            texts = [f"text {i}" for i in range(130)]
            vecs = backend.embed(texts)
            assert len(vecs) == len(texts)
            assert np.array_equal(vecs[129], stub_embed("text 129", dim=8))

    def test_service_backend_dimension_mismatch(self):
        with run_stub_server(dim=16) as url:
            backend = ServiceBackend(url, expected_dim=32)
            with pytest.raises(EmbedServiceError):
                backend.embed(["a"])

    def test_service_backend_unreachable(self):
        backend = ServiceBackend("http://127.0.0.1:9", expected_dim=8)
        with pytest.raises(EmbedServiceError):
            backend.embed(["a"])
