"""Two-cluster partition of event articles with outcome mapping and
distance/recency weighted probability mass.

The partition is plain Lloyd iteration, made deterministic by seeding:
the first centroid is a seeded random article, the second the article
farthest from it. An emptied cluster is re-seeded at the point farthest
from the surviving centroid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .pca import ARTICLE_HALF_LIFE_DAYS, recency_weight
from .validation import check_matrix

logger = logging.getLogger(__name__)

DISTANCE_EPSILON = 1e-9


@dataclass(frozen=True)
class OutcomeMap:
    """Which cluster (1 or 2) stands for the Yes outcome, with the number of
    labeled seeds consistent with that reading."""

    yes_cluster: int
    evidence: int


class TwoClusterKMeans(BaseEstimator):
    """Deterministic 2-means over embedding rows.

    After ``fit``: ``cluster_centers_`` (2, D), ``labels_`` in {0, 1},
    ``n_iter_``, ``converged_``, ``reseeds_``. Ties in assignment go to
    cluster 0 (reported 1-based as cluster 1).
    """

    def __init__(self, seed: int = 0, max_iter: int = 100, tol: float = 1e-6):
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        X = check_matrix(X, min_rows=2)
        if np.unique(X, axis=0).shape[0] < 2:
            raise ValueError("need at least 2 distinct vectors to form 2 clusters")
        rng = np.random.default_rng(self.seed)
        centers = self._initial_centers(X, rng)

        labels = None
        reseeds = 0
        converged = False
        n_iter = 0
        shift = np.inf
        for _ in range(self.max_iter):
            new_labels = _assign(X, centers)
            for k in (0, 1):
                if not np.any(new_labels == k):
                    centers[k] = X[_farthest_from(X, centers[1 - k][None, :])]
                    reseeds += 1
                    new_labels = _assign(X, centers)
            if labels is not None and np.array_equal(new_labels, labels):
                # Assignments are a fixed point of the current centers and the
                # centers are the means of those assignments.
                converged = True
                break
            labels = new_labels
            shift = 0.0
            for k in (0, 1):
                members = X[labels == k]
                if len(members):
                    new_center = members.mean(axis=0)
                    shift = max(shift, float(np.linalg.norm(new_center - centers[k])))
                    centers[k] = new_center
            n_iter += 1
        converged = converged or shift < self.tol

        self.cluster_centers_ = centers
        self.labels_ = labels
        self.distances_ = np.linalg.norm(X - centers[labels], axis=1)
        self.inertia_ = float((self.distances_**2).sum())
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.reseeds_ = reseeds
        return self

    @staticmethod
    def _initial_centers(X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        # Seeded random first centroid, then the point farthest from it.
        first = int(rng.integers(X.shape[0]))
        return np.stack([X[first], X[_farthest_from(X, X[first][None, :])]])

    def _check_fitted(self):
        if not hasattr(self, "cluster_centers_"):
            raise NotFittedError("fit must be called first")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return _assign(check_matrix(X), self.cluster_centers_)


def _assign(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(X[:, None, :] - centers[None, :, :], axis=2)
    return np.argmin(d, axis=1)


def _farthest_from(X: np.ndarray, points: np.ndarray) -> int:
    d = np.linalg.norm(X[:, None, :] - points[None, :, :], axis=2).min(axis=1)
    return int(np.argmax(d))


def map_clusters_to_outcomes(model: TwoClusterKMeans, seed_labels: dict[int, int],
                             mu_yes_top=None, top_features=None) -> OutcomeMap:
    """Decide which cluster is Yes from labeled seeds in the fitted set.

    ``seed_labels`` maps fitted row index -> 0/1 label. Majority of the
    Yes-labeled seeds wins; a tie falls back to the centroid nearer the
    Yes class mean over the selected dimensions; a tie there goes to
    cluster 1 with a warning.
    """
    model._check_fitted()
    if not seed_labels and mu_yes_top is None:
        raise ValueError("outcome mapping needs labeled seeds or a fitted class mean")
    yes_counts = [0, 0]
    for idx, label in seed_labels.items():
        if label == 1:
            yes_counts[model.labels_[idx]] += 1
    if yes_counts[0] != yes_counts[1]:
        yes_cluster = int(np.argmax(yes_counts))
    elif mu_yes_top is not None and top_features is not None:
        d = [np.linalg.norm(model.cluster_centers_[k][top_features] - mu_yes_top)
             for k in (0, 1)]
        if d[0] != d[1]:
            yes_cluster = int(np.argmin(d))
        else:
            logger.warning("outcome mapping tie unresolved; defaulting to cluster 1")
            yes_cluster = 0
    else:
        logger.warning("outcome mapping tie with no class mean; defaulting to cluster 1")
        yes_cluster = 0
    evidence = sum(
        1 for idx, label in seed_labels.items()
        if (model.labels_[idx] == yes_cluster) == (label == 1)
    )
    return OutcomeMap(yes_cluster=yes_cluster + 1, evidence=evidence)


def article_weight(distance: float, age_days: float, epsilon: float = DISTANCE_EPSILON,
                   half_life: float = ARTICLE_HALF_LIFE_DAYS) -> tuple[float, float]:
    """Raw (inverse-distance, recency) weight pair for one clustered article.

    ``distance`` is the article's Euclidean distance to its own centroid;
    epsilon keeps the inverse finite for an article sitting exactly on it.
    """
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    return 1.0 / (distance + epsilon), recency_weight(age_days, half_life)


def combine_weights(w_dist, w_time) -> np.ndarray:
    """Normalize each weight component to unit sum, then average them 50/50.

    The result sums to 1 over the event's articles.
    """
    w_dist = np.asarray(w_dist, dtype=float)
    w_time = np.asarray(w_time, dtype=float)
    if w_dist.shape != w_time.shape:
        raise ValueError("weight lists must have the same length")
    sums = w_dist.sum(), w_time.sum()
    if sums[0] <= 0.0 or sums[1] <= 0.0:
        raise ValueError("a weight component sums to zero; cannot normalize")
    return 0.5 * w_dist / sums[0] + 0.5 * w_time / sums[1]


def aggregate_mass(model: TwoClusterKMeans, outcome_map: OutcomeMap, weights) -> float:
    """Share of total article weight sitting in the Yes cluster."""
    model._check_fitted()
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != model.labels_.shape[0]:
        raise ValueError("one weight per fitted article required")
    yes = model.labels_ == (outcome_map.yes_cluster - 1)
    return float(weights[yes].sum() / weights.sum())
