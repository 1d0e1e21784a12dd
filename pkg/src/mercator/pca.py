"""Principal-component outcome classifier for labeled article embeddings.

Fits an orthonormal component basis on centered embeddings, picks the
component that best separates the Yes/No classes (Fisher score), keeps the
original dimensions with the largest absolute loadings on that component,
and scores unseen articles by inverse distance to the per-class means over
those dimensions. Event-level aggregation weights articles by recency.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import AbstentionError
from .validation import check_binary_labels, check_matrix, check_vector

logger = logging.getLogger(__name__)

ARTICLE_HALF_LIFE_DAYS = 25.0
LOADING_PERCENTILE = 95.0


@dataclass(frozen=True)
class PcaModel:
    """Centered orthonormal basis with nonincreasing eigenvalues.

    ``components`` has shape (r, D), one component per row; ``r`` never
    exceeds min(N - 1, D) for N fitted vectors.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    @property
    def rank(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True)
class VarianceReport:
    ratios: np.ndarray
    cumulative: np.ndarray
    n95: int


@dataclass(frozen=True)
class FisherSelection:
    """Fisher-scored component choice and the features it promotes."""

    fisher_scores: np.ndarray
    k_star: int
    tau_pca: float
    top_features: np.ndarray
    mu_yes_top: np.ndarray
    mu_no_top: np.ndarray


@dataclass(frozen=True)
class ArticleScore:
    article_id: str
    p_yes: float
    recency_weight: float

    @property
    def p_no(self) -> float:
        return 1.0 - self.p_yes


def fit_pca(X, y=None) -> PcaModel:
    """Fit the component basis via SVD of the centered data matrix.

    SVD of the centered rows is numerically equivalent to an
    eigendecomposition of the sample covariance but avoids forming it.
    """
    X = check_matrix(X, min_rows=3)
    if y is not None:
        check_binary_labels(y, n=X.shape[0])
    n, d = X.shape
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    r = min(n - 1, d)
    s, vt = s[:r], vt[:r]
    if not np.any(s > 0):
        raise ValueError("data has no variance; cannot fit components")
    # Fix the sign ambiguity so refits are reproducible.
    flip = np.sign(vt[np.arange(r), np.abs(vt).argmax(axis=1)])
    flip[flip == 0] = 1.0
    vt = vt * flip[:, None]
    eigenvalues = s**2 / (n - 1)
    return PcaModel(mean=mean, components=vt, eigenvalues=eigenvalues)


def explained_variance(model: PcaModel) -> VarianceReport:
    """Per-component variance ratios, their running total, and the smallest
    prefix reaching 95% of total variance."""
    ratios = model.eigenvalues / model.eigenvalues.sum()
    cumulative = np.cumsum(ratios)
    n95 = int(np.searchsorted(cumulative, 0.95 - 1e-12) + 1)
    return VarianceReport(ratios=ratios, cumulative=cumulative, n95=n95)


def project(model: PcaModel, v) -> np.ndarray:
    """Coordinates of ``v`` (vector or matrix of rows) in the component basis."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 1:
        return model.components @ (check_vector(arr, dim=model.dim) - model.mean)
    arr = check_matrix(arr)
    if arr.shape[1] != model.dim:
        raise ValueError(f"expected dimension {model.dim}, got {arr.shape[1]}")
    return (arr - model.mean) @ model.components.T


def fisher_scores(projected, y) -> tuple[np.ndarray, int]:
    """Per-component squared class-mean gap over summed class variances.

    Sample variances (ddof=1) are used, so each class needs at least two
    points. A zero denominator with distinct means scores +inf (perfect
    separation) and wins the argmax; ties break toward the lowest index.
    """
    S = check_matrix(projected)
    y = check_binary_labels(y, n=S.shape[0])
    yes, no = S[y == 1], S[y == 0]
    if len(yes) < 2 or len(no) < 2:
        raise ValueError("each class needs at least 2 points for variance estimates")
    gap = yes.mean(axis=0) - no.mean(axis=0)
    denom = yes.var(axis=0, ddof=1) + no.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(
            denom > 0.0, gap**2 / np.where(denom > 0.0, denom, 1.0),
            np.where(gap != 0.0, np.inf, 0.0),
        )
    return scores, int(np.argmax(scores))


def select_top_features(model: PcaModel, k_star: int,
                        percentile: float = LOADING_PERCENTILE) -> tuple[float, np.ndarray]:
    """Original dimensions whose absolute loadings on component ``k_star``
    reach the given percentile (linear interpolation between order stats)."""
    loadings = np.abs(model.components[k_star])
    tau = float(np.percentile(loadings, percentile, method="linear"))
    top = np.flatnonzero(loadings >= tau)
    return tau, top


def class_means(X, y, top_features) -> tuple[np.ndarray, np.ndarray]:
    """Per-class means of the raw (uncentered) embeddings, restricted to the
    selected dimensions."""
    X = check_matrix(X)
    y = check_binary_labels(y, n=X.shape[0])
    top = np.asarray(top_features, dtype=int)
    return X[y == 1][:, top].mean(axis=0), X[y == 0][:, top].mean(axis=0)


def article_p_yes(v_new, selection: FisherSelection) -> float:
    """Inverse-distance probability of the Yes outcome for one article.

    Distances are Euclidean over the selected dimensions; an article
    equidistant from both class means (including the doubly-degenerate
    zero/zero case) scores 0.5.
    """
    v = np.asarray(v_new, dtype=float).ravel()
    v_top = v[selection.top_features]
    d_yes = float(np.linalg.norm(v_top - selection.mu_yes_top))
    d_no = float(np.linalg.norm(v_top - selection.mu_no_top))
    if d_yes + d_no == 0.0:
        return 0.5
    return d_no / (d_yes + d_no)


def recency_weight(age_days: float, half_life: float = ARTICLE_HALF_LIFE_DAYS) -> float:
    """Exponential age decay, halving every ``half_life`` days.

    Negative ages (article stamped after the scoring instant) clamp to zero
    with a warning rather than weighting above 1.
    """
    if age_days < 0:
        logger.warning("negative article age %.3f days clamped to 0", age_days)
        age_days = 0.0
    return math.exp(-math.log(2.0) / half_life * age_days)


def aggregate_scores(scores: list[ArticleScore]) -> float:
    """Recency-weighted mean of per-article Yes probabilities."""
    if not scores:
        raise AbstentionError("no scored articles: component has no signal")
    weights = np.array([s.recency_weight for s in scores])
    probs = np.array([s.p_yes for s in scores])
    total = weights.sum()
    if total <= 0.0:
        raise AbstentionError("all article weights are zero")
    return float(np.dot(weights, probs) / total)


class PcaOutcomeClassifier(BaseEstimator):
    """Binary outcome scorer over article embeddings.

    ``fit`` expects the raw embedding matrix and 0/1 labels (1 = Yes);
    ``predict_proba`` returns ``[p_no, p_yes]`` columns for new embeddings.
    """

    def __init__(self, loading_percentile: float = LOADING_PERCENTILE):
        self.loading_percentile = loading_percentile

    def fit(self, X, y):
        X = check_matrix(X, min_rows=3)
        y = check_binary_labels(y, n=X.shape[0])
        model = fit_pca(X)
        scores, k_star = fisher_scores(project(model, X), y)
        tau, top = select_top_features(model, k_star, self.loading_percentile)
        mu_yes, mu_no = class_means(X, y, top)
        self.model_ = model
        self.selection_ = FisherSelection(
            fisher_scores=scores, k_star=k_star, tau_pca=tau, top_features=top,
            mu_yes_top=mu_yes, mu_no_top=mu_no,
        )
        self.variance_ = explained_variance(model)
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "selection_"):
            raise NotFittedError("fit must be called first")

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return project(self.model_, X)

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_matrix(X)
        p_yes = np.array([article_p_yes(row, self.selection_) for row in X])
        return np.column_stack([1.0 - p_yes, p_yes])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


def score_articles(classifier: PcaOutcomeClassifier, embeddings,
                   ages_days: dict[str, float]) -> list[ArticleScore]:
    """Score unlabeled article embeddings, attaching recency weights."""
    scores = []
    for emb in embeddings:
        p = article_p_yes(emb.vector, classifier.selection_)
        w = recency_weight(ages_days[emb.article_id])
        scores.append(ArticleScore(article_id=emb.article_id, p_yes=p, recency_weight=w))
    return scores
