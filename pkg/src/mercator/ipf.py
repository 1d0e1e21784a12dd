"""Weighted combination layers.

Two convex combiners: submodule probabilities into the semantic-news
aggregate, and module probabilities into the final event probability.
Weights are analyst configuration, validated hard. A module that produced
no signal abstains, and its weight is spread proportionally over the
modules that did; an abstention never silently becomes a coin flip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AbstentionError, ConfigError
from .validation import check_probability

WEIGHT_SUM_TOLERANCE = 1e-9

SNA_MODULES = ("pca", "kmeans", "zeroshot")
IPF_MODULES = ("lstm", "sna", "crowd", "macro")


def validate_weights(weights: dict[str, float],
                     tolerance: float = WEIGHT_SUM_TOLERANCE) -> None:
    """Reject negative entries and weight sums away from 1, naming the culprit."""
    for name, value in weights.items():
        if value < 0:
            raise ConfigError(f"weight {name} is negative ({value})")
    total = sum(weights.values())
    if abs(total - 1.0) > tolerance:
        raise ConfigError(f"weights {', '.join(weights)} sum to {total!r}, expected 1")


@dataclass(frozen=True)
class SnaWeights:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        validate_weights({"alpha": self.alpha, "beta": self.beta,
                          "gamma": self.gamma})

    def as_dict(self) -> dict[str, float]:
        return {"pca": self.alpha, "kmeans": self.beta, "zeroshot": self.gamma}


@dataclass(frozen=True)
class IpfWeights:
    w_lstm: float
    w_sna: float
    w_crowd: float
    w_macro: float

    def __post_init__(self):
        validate_weights({"w_lstm": self.w_lstm, "w_sna": self.w_sna,
                          "w_crowd": self.w_crowd, "w_macro": self.w_macro})

    def as_dict(self) -> dict[str, float]:
        return {"lstm": self.w_lstm, "sna": self.w_sna,
                "crowd": self.w_crowd, "macro": self.w_macro}


@dataclass(frozen=True)
class EventForecast:
    event_id: str
    probabilities: dict[str, float | None]
    effective_weights: dict[str, float]
    p_yes: float
    p_no: float
    notes: tuple[str, ...] = field(default=())


def renormalize(weights: dict[str, float],
                present: set[str]) -> dict[str, float]:
    """Spread absent modules' weight proportionally over the present ones.

    With nothing absent this is the identity. Present modules whose
    configured weight is all zero leave nothing to scale, so the absent
    mass is split evenly instead.
    """
    absent_mass = sum(w for name, w in weights.items() if name not in present)
    present_mass = 1.0 - absent_mass
    if present_mass <= 0.0:
        share = 1.0 / len(present)
        return {name: (share if name in present else 0.0) for name in weights}
    return {name: (w / present_mass if name in present else 0.0)
            for name, w in weights.items()}


def combine_weighted(probabilities: dict[str, float | None],
                     weights: dict[str, float],
                     what: str) -> tuple[float, dict[str, float], list[str]]:
    """Convex combination over the modules that produced a probability.

    Returns the combined probability, the effective weights actually
    applied, and human-readable notes about any abstentions.
    """
    present = set()
    for name, p in probabilities.items():
        if p is None:
            continue
        check_probability(p, f"{what} probability {name}")
        present.add(name)
    if not present:
        raise AbstentionError(f"every {what} module abstained")
    effective = renormalize(weights, present)
    p = sum(effective[name] * probabilities[name] for name in present)
    notes = [f"{name} abstained; weight {weights[name]:g} redistributed"
             for name in weights if name not in present]
    return min(max(p, 0.0), 1.0), effective, notes


def combine_sna(p_pca: float | None, p_kmeans: float | None,
                p_zs: float | None, weights: SnaWeights) -> float:
    p, _, _ = combine_weighted({"pca": p_pca, "kmeans": p_kmeans,
                                "zeroshot": p_zs}, weights.as_dict(), "semantic")
    return p


def combine_ipf(event_id: str, modules: dict[str, float | None],
                weights: IpfWeights) -> EventForecast:
    probabilities = {name: modules.get(name) for name in IPF_MODULES}
    unknown = set(modules) - set(IPF_MODULES)
    if unknown:
        raise ConfigError(f"unknown forecast modules: {', '.join(sorted(unknown))}")
    p_yes, effective, notes = combine_weighted(probabilities, weights.as_dict(),
                                               "forecast")
    return EventForecast(event_id=event_id, probabilities=probabilities,
                         effective_weights=effective, p_yes=p_yes,
                         p_no=1.0 - p_yes, notes=tuple(notes))
