"""Ensemble probability engine for binary economic events.

Combines semantic news classification (a variance/Fisher path, two-way
clustering, and zero-shot labeling), prediction-market aggregation,
threshold-forecast calibration, and an analyst prior into one weighted
probability per event.
"""

from .calibration import (PointForecast, ThresholdDirection, ThresholdSpec,
                          baseline_forecast, calibrate, sigmoid)
from .corpus import (Article, Label, Outcome, dedupe, fetch_articles,
                     load_corpus, load_labels, store_corpus)
from .embedding import (DEFAULT_DIM, DEFAULT_RELEVANCE_TAU, Embedding,
                        ServiceBackend, StubBackend, cosine_similarity,
                        embed_articles, relevance_filter, stub_embed)
from .errors import (AbstentionError, ChatServiceError, ConfigError,
                     CorpusError, EmbedServiceError, MarketLookupError,
                     MercatorError, ProviderAuthError, ProviderError,
                     ProviderNetworkError)
from .events import EventKind, EventSpec, find_event, load_events, parse_event
from .ipf import (EventForecast, IpfWeights, SnaWeights, combine_ipf,
                  combine_sna, combine_weighted, validate_weights)
from .kmeans import (OutcomeMap, TwoClusterKMeans, aggregate_mass,
                     article_weight, combine_weights, map_clusters_to_outcomes)
from .markets import (CrowdEstimate, FixtureMarketClient, HttpMarketClient,
                      MarketQuote, ProxySpec, adjusted_probability,
                      crowd_estimate, direct_probability, fetch_quote,
                      inferred_probability, resolution_decay)
from .pca import (FisherSelection, PcaModel, PcaOutcomeClassifier,
                  aggregate_scores, article_p_yes, explained_variance,
                  fisher_scores, fit_pca, project, recency_weight,
                  select_top_features)
from .pipeline import PipelineOptions, PipelineResult, run_many, run_pipeline
from .zeroshot import (FixtureChatClient, HttpChatClient, Verdict,
                       VerdictValue, build_prompt, classify_batch,
                       parse_verdict, ratio)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
