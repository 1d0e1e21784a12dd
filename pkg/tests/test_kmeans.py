import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from mercator.kmeans import (OutcomeMap, TwoClusterKMeans, aggregate_mass,
                             article_weight, combine_weights,
                             map_clusters_to_outcomes)


def two_blobs(n_per=8, dim=4, gap=9.0, seed=5):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, dim))
    b = rng.normal(size=(n_per, dim)) + gap
    return np.vstack([a, b])


class TestFit:
    def test_separated_blobs_recovered(self):
        X = two_blobs()
        model = TwoClusterKMeans(seed=0).fit(X)
        first, second = model.labels_[:8], model.labels_[8:]
        assert len(set(first.tolist())) == 1
        assert len(set(second.tolist())) == 1
        assert first[0] != second[0]
        assert model.converged_

    def test_deterministic_for_fixed_seed(self):
        X = two_blobs(seed=13)
        a = TwoClusterKMeans(seed=42).fit(X)
        b = TwoClusterKMeans(seed=42).fit(X)
        assert np.array_equal(a.labels_, b.labels_)
        assert np.allclose(a.cluster_centers_, b.cluster_centers_)

    def test_centroids_are_member_means(self):
        X = two_blobs(seed=2)
        model = TwoClusterKMeans(seed=1).fit(X)
        for k in (0, 1):
            members = X[model.labels_ == k]
            assert np.allclose(model.cluster_centers_[k], members.mean(axis=0),
                               atol=1e-9)

    def test_two_points_one_each(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        model = TwoClusterKMeans(seed=0).fit(X)
        assert sorted(model.labels_.tolist()) == [0, 1]

    def test_identical_points_rejected(self):
        with pytest.raises(ValueError):
            TwoClusterKMeans().fit(np.ones((4, 3)))

    def test_tie_assignment_goes_to_cluster_zero(self):
        X = two_blobs(seed=3)
        model = TwoClusterKMeans(seed=0).fit(X)
        mid = model.cluster_centers_.mean(axis=0)
        assert model.predict(mid[None, :]).tolist() == [0]

    def test_empty_cluster_reseeded(self, monkeypatch):
        # Plant the second center far beyond every point; the first sweep
        # assigns everything to cluster 0, and re-seeding must rescue
        # cluster 1 with the point farthest from the survivor.
        X = np.vstack([
            np.zeros((5, 2)),
            np.array([[0.1, 0.0]]),
            np.full((5, 2), 20.0),
        ])
        model = TwoClusterKMeans(seed=0)
        centers = np.array([[0.0, 0.0], [100.0, 100.0]])
        monkeypatch.setattr(TwoClusterKMeans, "_initial_centers",
                            staticmethod(lambda X_, rng: centers.copy()))
        model.fit(X)
        assert model.reseeds_ >= 1
        assert len(set(model.labels_.tolist())) == 2
        assert model.converged_

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            TwoClusterKMeans().predict(np.zeros((1, 2)))

    def test_get_params_round_trip(self):
        model = TwoClusterKMeans(seed=9, max_iter=50, tol=1e-4)
        assert model.get_params() == {"seed": 9, "max_iter": 50, "tol": 1e-4}

    def test_distances_match_own_centroid(self):
        X = two_blobs(seed=4)
        model = TwoClusterKMeans(seed=0).fit(X)
        expected = np.linalg.norm(
            X - model.cluster_centers_[model.labels_], axis=1)
        assert np.allclose(model.distances_, expected, atol=1e-12)

    @settings(deadline=None, max_examples=20)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_every_cluster_nonempty(self, seed):
        X = two_blobs(seed=seed % 1000)
        model = TwoClusterKMeans(seed=seed).fit(X)
        assert set(model.labels_.tolist()) == {0, 1}


class TestOutcomeMap:
    def fitted(self):
        X = np.vstack([np.zeros((3, 2)), np.full((3, 2), 10.0),
                       np.array([[0.2, 0.0]])])
        return TwoClusterKMeans(seed=0).fit(X), X

    def test_majority_of_yes_seeds_wins(self):
        model, _ = self.fitted()
        left = int(model.labels_[0])
        seeds = {0: 1, 1: 1, 3: 0}
        out = map_clusters_to_outcomes(model, seeds)
        assert out.yes_cluster == left + 1
        assert out.evidence == 3

    def test_tie_falls_back_to_class_mean(self):
        model, _ = self.fitted()
        right = int(model.labels_[3])
        seeds = {0: 1, 3: 1}
        out = map_clusters_to_outcomes(
            model, seeds, mu_yes_top=np.array([10.0, 10.0]),
            top_features=np.array([0, 1]))
        assert out.yes_cluster == right + 1

    def test_unresolvable_tie_defaults_to_cluster_one(self, caplog):
        model, _ = self.fitted()
        seeds = {0: 1, 3: 1}
        with caplog.at_level("WARNING"):
            out = map_clusters_to_outcomes(model, seeds)
        assert out.yes_cluster == 1
        assert any("tie" in r.message for r in caplog.records)

    def test_no_information_at_all_rejected(self):
        model, _ = self.fitted()
        with pytest.raises(ValueError):
            map_clusters_to_outcomes(model, {})

    def test_evidence_counts_consistent_seeds(self):
        model, _ = self.fitted()
        left = int(model.labels_[0])
        seeds = {0: 1, 1: 1, 2: 0, 3: 0, 4: 0}
        out = map_clusters_to_outcomes(model, seeds)
        assert out.yes_cluster == left + 1
        # Seeds 0 and 1 are Yes in the Yes cluster; 3 and 4 are No outside
        # it; seed 2 is a No article sitting in the Yes cluster.
        assert out.evidence == 4


class TestWeights:
    def test_inverse_distance(self):
        w_dist, _ = article_weight(distance=4.0, age_days=0.0)
        assert w_dist == pytest.approx(1.0 / (4.0 + 1e-9), rel=1e-12)

    def test_zero_distance_finite(self):
        w_dist, _ = article_weight(distance=0.0, age_days=0.0)
        assert w_dist == pytest.approx(1e9, rel=1e-9)

    def test_recency_component_half_life(self):
        _, w_time = article_weight(distance=1.0, age_days=25.0)
        assert w_time == pytest.approx(0.5, abs=1e-12)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            article_weight(distance=-0.1, age_days=1.0)

    def test_combine_normalizes_each_component(self):
        # dist parts normalize to (2/3, 1/3), time to (1/2, 1/2):
        # combined (7/12, 5/12).
        w = combine_weights([2.0, 1.0], [5.0, 5.0])
        assert w == pytest.approx([7 / 12, 5 / 12], abs=1e-12)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_combine_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            combine_weights([1.0], [1.0, 2.0])

    def test_combine_rejects_zero_mass(self):
        with pytest.raises(ValueError):
            combine_weights([0.0, 0.0], [1.0, 1.0])

    @settings(deadline=None, max_examples=50)
    @given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=30))
    def test_combined_weights_sum_to_one(self, w_dist):
        w_time = [1.0] * len(w_dist)
        w = combine_weights(w_dist, w_time)
        assert w.sum() == pytest.approx(1.0, rel=1e-9)
        assert np.all(w >= 0)


class TestAggregateMass:
    def test_hand_value(self):
        # Yes cluster holds rows 0 and 1; their combined weight is
        # 0.5 * (10/20 + 10/20) from distance and 0.5 * (4/12 + 4/12) from
        # time: 0.5 + 0.5 * 2/3 = ... computed below from first principles.
        X = np.array([[0.0], [0.001], [10.0], [10.001]])
        model = TwoClusterKMeans(seed=0).fit(X)
        yes_cluster = int(model.labels_[0]) + 1
        outcome = OutcomeMap(yes_cluster=yes_cluster, evidence=2)
        w_dist = np.array([10.0, 10.0, 5.0, 5.0])
        w_time = np.array([4.0, 4.0, 2.0, 2.0])
        weights = combine_weights(w_dist, w_time)
        mass = aggregate_mass(model, outcome, weights)
        expected = 0.5 * (20 / 30) + 0.5 * (8 / 12)
        assert mass == pytest.approx(expected, abs=1e-12)

    def test_all_mass_one_cluster(self):
        X = np.array([[0.0], [0.1], [9.0]])
        model = TwoClusterKMeans(seed=0).fit(X)
        yes_cluster = int(model.labels_[0]) + 1
        outcome = OutcomeMap(yes_cluster=yes_cluster, evidence=1)
        weights = np.array([1.0, 1.0, 0.0])
        assert aggregate_mass(model, outcome, weights) == 1.0

    def test_weight_count_must_match(self):
        X = np.array([[0.0], [1.0]])
        model = TwoClusterKMeans(seed=0).fit(X)
        with pytest.raises(ValueError):
            aggregate_mass(model, OutcomeMap(1, 0), np.array([1.0]))

    def test_complement_structure(self):
        X = two_blobs(seed=21)
        model = TwoClusterKMeans(seed=0).fit(X)
        weights = np.full(len(X), 1.0 / len(X))
        m1 = aggregate_mass(model, OutcomeMap(1, 0), weights)
        m2 = aggregate_mass(model, OutcomeMap(2, 0), weights)
        assert m1 + m2 == pytest.approx(1.0, abs=1e-12)
