import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.exceptions import NotFittedError

from mercator.embedding import Embedding
from mercator.errors import AbstentionError
from mercator.pca import (ArticleScore, FisherSelection, PcaOutcomeClassifier,
                          aggregate_scores, article_p_yes, class_means,
                          explained_variance, fisher_scores, fit_pca, project,
                          recency_weight, score_articles, select_top_features)


def brute_fisher(projected, y):
    """Straightforward per-component Fisher score, loops and all."""
    out = []
    for k in range(projected.shape[1]):
        yes = projected[y == 1, k]
        no = projected[y == 0, k]
        gap = (yes.mean() - no.mean()) ** 2
        denom = yes.var(ddof=1) + no.var(ddof=1)
        if denom == 0.0:
            out.append(math.inf if gap > 0 else 0.0)
        else:
            out.append(gap / denom)
    return np.array(out)


class TestFitPca:
    def test_collinear_points_recover_the_line(self):
        # Points t*(2,1) for t = 0, 2, 1, 3: one true direction, variance
        # along it = 25/3 (sample), second eigenvalue exactly 0.
        X = np.array([[0, 0], [4, 2], [2, 1], [6, 3]], dtype=float)
        model = fit_pca(X)
        direction = np.array([2.0, 1.0]) / math.sqrt(5.0)
        assert np.allclose(np.abs(model.components[0]), np.abs(direction))
        assert model.eigenvalues[0] == pytest.approx(25 / 3, abs=1e-10)
        assert model.eigenvalues[1] == pytest.approx(0.0, abs=1e-10)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 12))
        model = fit_pca(X)
        gram = model.components @ model.components.T
        assert np.allclose(gram, np.eye(model.rank), atol=1e-10)

    def test_eigenvalues_nonincreasing(self):
        rng = np.random.default_rng(8)
        model = fit_pca(rng.normal(size=(30, 10)))
        assert np.all(np.diff(model.eigenvalues) <= 1e-12)

    def test_rank_capped_by_samples(self):
        rng = np.random.default_rng(9)
        model = fit_pca(rng.normal(size=(5, 64)))
        assert model.rank == 4

    def test_sign_convention_fixed(self):
        X = np.array([[0, 0], [4, 2], [2, 1], [6, 3]], dtype=float)
        model = fit_pca(X)
        k = np.argmax(np.abs(model.components[0]))
        assert model.components[0][k] > 0

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            fit_pca(np.ones((5, 3)))

    def test_reconstruction_full_rank(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(20, 6))
        model = fit_pca(X)
        projected = project(model, X)
        back = projected @ model.components + model.mean
        assert np.allclose(back, X, atol=1e-8)


class TestExplainedVariance:
    @staticmethod
    def _model_with_eigenvalues(eigenvalues):
        d = len(eigenvalues)
        from mercator.pca import PcaModel
        return PcaModel(mean=np.zeros(d), components=np.eye(d),
                        eigenvalues=np.array(eigenvalues, dtype=float))

    def test_ratios_sum_to_one(self):
        report = explained_variance(self._model_with_eigenvalues([8, 1, 1]))
        assert report.ratios == pytest.approx([0.8, 0.1, 0.1], abs=1e-12)
        assert report.cumulative[-1] == pytest.approx(1.0, abs=1e-12)

    def test_n95_counts_components_to_the_cutoff(self):
        assert explained_variance(
            self._model_with_eigenvalues([8, 1, 1])).n95 == 3
        # First component alone reaches exactly 95%.
        assert explained_variance(
            self._model_with_eigenvalues([19, 1])).n95 == 1
        # 0.9 alone falls short; 0.9 + 0.06 crosses the line.
        assert explained_variance(
            self._model_with_eigenvalues([90, 6, 3, 1])).n95 == 2


class TestFisher:
    def test_hand_value(self):
        # Projected 1-D: yes (1,2,3) vs no (7,8,9): (2-8)^2/(1+1) = 18.
        projected = np.array([[1.0], [2.0], [3.0], [7.0], [8.0], [9.0]])
        y = np.array([1, 1, 1, 0, 0, 0])
        scores, k_star = fisher_scores(projected, y)
        assert scores[0] == pytest.approx(18.0, abs=1e-12)
        assert k_star == 0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        projected = rng.normal(size=(50, 8))
        y = (rng.random(50) > 0.5).astype(int)
        y[:4] = [0, 0, 1, 1]
        scores, k_star = fisher_scores(projected, y)
        expected = brute_fisher(projected, y)
        assert np.allclose(scores, expected, atol=1e-10)
        assert k_star == int(np.argmax(expected))

    def test_zero_variance_separated_means_gives_inf(self):
        projected = np.array([[1.0], [1.0], [3.0], [3.0]])
        y = np.array([1, 1, 0, 0])
        scores, k_star = fisher_scores(projected, y)
        assert math.isinf(scores[0])
        assert k_star == 0

    def test_zero_variance_equal_means_gives_zero(self):
        projected = np.array([[2.0], [2.0], [2.0], [2.0]])
        y = np.array([1, 1, 0, 0])
        scores, _ = fisher_scores(projected, y)
        assert scores[0] == 0.0

    def test_tie_goes_to_lowest_index(self):
        # Two identical columns tie exactly; argmax must pick column 0.
        col = np.array([1.0, 2.0, 7.0, 8.0])
        projected = np.column_stack([col, col])
        y = np.array([1, 1, 0, 0])
        _, k_star = fisher_scores(projected, y)
        assert k_star == 0

    def test_needs_two_per_class(self):
        projected = np.array([[1.0], [2.0], [3.0]])
        with pytest.raises(ValueError):
            fisher_scores(projected, np.array([1, 0, 0]))


class TestTopFeatures:
    def test_hand_percentile(self):
        # |loadings| = .1 .2 .3 .4 .5 -> Q95 (linear) between the order
        # statistics at ranks 3.8: .4 + .8 * (.5 - .4) = .48 -> only dim 4.
        from mercator.pca import PcaModel
        comp = np.array([[0.1, -0.2, 0.3, -0.4, 0.5]])
        model = PcaModel(mean=np.zeros(5), components=comp,
                         eigenvalues=np.array([1.0]))
        tau, top = select_top_features(model, k_star=0)
        assert tau == pytest.approx(0.48, abs=1e-12)
        assert top.tolist() == [4]

    def test_boundary_inclusive(self):
        from mercator.pca import PcaModel
        comp = np.array([[3.0, 4.0]]) / 5.0
        model = PcaModel(mean=np.zeros(2), components=comp,
                         eigenvalues=np.array([1.0]))
        tau, top = select_top_features(model, k_star=0, percentile=0.0)
        # Percentile 0 -> tau = min |loading|; both dims qualify.
        assert top.tolist() == [0, 1]


class TestArticleProbability:
    SEL = FisherSelection(fisher_scores=np.array([1.0]), k_star=0,
                          tau_pca=0.0, top_features=np.array([0, 1]),
                          mu_yes_top=np.array([0.0, 0.0]),
                          mu_no_top=np.array([4.0, 0.0]))

    def test_hand_value(self):
        # d_yes = 1, d_no = 3 -> p = 3/4.
        assert article_p_yes(np.array([1.0, 0.0]), self.SEL) == pytest.approx(
            0.75, abs=1e-12)

    def test_midpoint_is_half(self):
        assert article_p_yes(np.array([2.0, 0.0]), self.SEL) == 0.5

    def test_degenerate_zero_distances(self):
        sel = FisherSelection(fisher_scores=np.array([1.0]), k_star=0,
                              tau_pca=0.0, top_features=np.array([0]),
                              mu_yes_top=np.array([1.0]),
                              mu_no_top=np.array([1.0]))
        assert article_p_yes(np.array([1.0]), sel) == 0.5

    @given(arrays(float, 2, elements=st.floats(-50, 50)))
    def test_always_a_probability(self, v):
        p = article_p_yes(v, self.SEL)
        assert 0.0 <= p <= 1.0

    def test_class_means_use_raw_embeddings(self):
        X = np.array([[1.0, 10.0], [3.0, 10.0], [5.0, 0.0], [7.0, 0.0]])
        y = np.array([1, 1, 0, 0])
        mu_yes, mu_no = class_means(X, y, np.array([0]))
        assert mu_yes.tolist() == [2.0]
        assert mu_no.tolist() == [6.0]


class TestRecencyAndAggregate:
    def test_half_life(self):
        assert recency_weight(25.0) == pytest.approx(0.5, abs=1e-12)
        assert recency_weight(0.0) == 1.0
        assert recency_weight(50.0) == pytest.approx(0.25, abs=1e-12)

    def test_negative_age_clamps_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            w = recency_weight(-3.0)
        assert w == 1.0
        assert any("clamped" in r.message for r in caplog.records)

    def test_weighted_aggregate_hand_value(self):
        scores = [ArticleScore("a", p_yes=0.62, recency_weight=0.505625),
                  ArticleScore("b", p_yes=0.30, recency_weight=0.494375)]
        assert aggregate_scores(scores) == pytest.approx(0.4618, abs=1e-12)

    def test_empty_aggregation_abstains(self):
        with pytest.raises(AbstentionError):
            aggregate_scores([])

    def test_zero_weights_abstain(self):
        scores = [ArticleScore("a", p_yes=0.7, recency_weight=0.0)]
        with pytest.raises(AbstentionError):
            aggregate_scores(scores)


def two_blob_data(n_per=10, dim=6, gap=6.0, seed=3):
    rng = np.random.default_rng(seed)
    yes = rng.normal(size=(n_per, dim)) + gap
    no = rng.normal(size=(n_per, dim))
    X = np.vstack([yes, no])
    y = np.array([1] * n_per + [0] * n_per)
    return X, y


class TestClassifier:
    def test_fit_predict_round_trip(self):
        X, y = two_blob_data()
        clf = PcaOutcomeClassifier().fit(X, y)
        proba = clf.predict_proba(X)
        assert proba.shape == (20, 2)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-12)
        assert (clf.predict(X) == y).mean() >= 0.95

    def test_not_fitted_error(self):
        with pytest.raises(NotFittedError):
            PcaOutcomeClassifier().predict_proba(np.zeros((2, 3)))

    def test_get_params_round_trip(self):
        clf = PcaOutcomeClassifier(loading_percentile=90.0)
        params = clf.get_params()
        assert params == {"loading_percentile": 90.0}
        clone = PcaOutcomeClassifier(**params)
        assert clone.loading_percentile == 90.0

    def test_score_articles_attaches_recency(self):
        X, y = two_blob_data()
        clf = PcaOutcomeClassifier().fit(X, y)
        embs = [Embedding("new", X[0])]
        [score] = score_articles(clf, embs, {"new": 25.0})
        assert score.recency_weight == pytest.approx(0.5, abs=1e-12)
        assert score.p_yes == pytest.approx(
            clf.predict_proba(X[:1])[0, 1], abs=1e-12)

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_probabilities_complement(self, seed):
        X, y = two_blob_data(seed=seed)
        clf = PcaOutcomeClassifier().fit(X, y)
        proba = clf.predict_proba(X[:5])
        assert np.all((proba >= 0) & (proba <= 1))
        assert np.allclose(proba[:, 0] + proba[:, 1], 1.0, atol=1e-12)
