"""End-to-end forecast orchestration.

One run takes an event through ingest, embedding, relevance filtering,
the three semantic classifiers, market aggregation, threshold
calibration, and the final weighted combination, then writes a full
audit trail (forecast record, per-article tables, scree data, manifest).
Every stochastic or time-dependent input is injected (seed, as-of clock,
fixture files), so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, time, timedelta, timezone

import numpy as np

from . import calibration as calib
from . import corpus as corpus_mod
from . import kmeans as kmeans_mod
from . import pca as pca_mod
from . import zeroshot as zs_mod
from .embedding import (DEFAULT_DIM, DEFAULT_RELEVANCE_TAU, ServiceBackend,
                        StubBackend, embed_articles, relevance_filter)
from .errors import AbstentionError, ConfigError, CorpusError
from .events import EventKind, EventSpec
from .ipf import combine_ipf, combine_weighted
from .markets import FixtureMarketClient, HttpMarketClient, crowd_estimate, fetch_quote

log = logging.getLogger(__name__)

MARKET_URL_ENV = "MERCATOR_MARKET_URL"

FORECAST_FILE = "forecast.json"
SUMMARY_FILE = "summary.md"
MANIFEST_FILE = "manifest.json"
TABLE_FILES = ("scree.csv", "projection_top_variance.csv",
               "projection_top_fisher.csv", "article_probs.csv",
               "kmeans_clusters.csv")


@dataclass
class PipelineOptions:
    """Everything a run depends on besides the event itself."""

    out_dir: str = "out"
    seed: int = 0
    as_of: datetime | None = None
    fixture_dir: str | None = None
    provider: str | None = None
    embed_backend: str = "stub"
    embed_url: str | None = None
    embed_dim: int = DEFAULT_DIM
    tau: float = DEFAULT_RELEVANCE_TAU
    article_cap: int = corpus_mod.DEFAULT_ARTICLE_CAP
    zeroshot_budget: int = 500
    zeroshot_parallelism: int = zs_mod.DEFAULT_PARALLELISM
    xhat: float | None = None
    series_path: str | None = None
    labels_path: str | None = None
    markets_path: str | None = None
    zeroshot_path: str | None = None
    config_path: str | None = None


@dataclass
class PipelineResult:
    record: dict
    manifest: dict
    out_dir: str
    abstained: bool
    paths: dict[str, str] = field(default_factory=dict)


def fixture_file(opts: PipelineOptions, explicit: str | None,
                  name: str) -> str | None:
    """Explicit path wins; otherwise fall back to the fixture directory."""
    if explicit:
        return explicit
    if opts.fixture_dir:
        candidate = os.path.join(opts.fixture_dir, name)
        if os.path.exists(candidate):
            return candidate
    return None


def resolve_as_of(event: EventSpec, as_of: datetime | None) -> datetime:
    """Runs are scored as of the end of the event's news window unless a
    clock is injected; wall-clock time never enters."""
    if as_of is None:
        return datetime.combine(event.window_end, time.min,
                                tzinfo=timezone.utc) + timedelta(days=1)
    if as_of.tzinfo is None:
        return as_of.replace(tzinfo=timezone.utc)
    return as_of


def make_embed_backend(opts: PipelineOptions):
    if opts.embed_backend == "stub":
        return StubBackend(dim=opts.embed_dim)
    if opts.embed_backend == "service":
        if not opts.embed_url:
            raise ConfigError("embed backend 'service' needs --embed-url")
        return ServiceBackend(opts.embed_url, expected_dim=opts.embed_dim)
    raise ConfigError(f"unknown embed backend {opts.embed_backend!r}")


def ingest_step(event: EventSpec, opts: PipelineOptions) -> list[corpus_mod.Article]:
    if opts.fixture_dir:
        provider = corpus_mod.FixtureProvider(opts.fixture_dir)
    elif opts.provider:
        try:
            provider = corpus_mod.PROVIDERS[opts.provider]()
        except KeyError as exc:
            raise ConfigError(f"unknown provider {opts.provider!r} (known: "
                              f"{', '.join(corpus_mod.PROVIDERS)})") from exc
    else:
        raise ConfigError("either --fixture-dir or --provider is required")
    return corpus_mod.fetch_articles(event, provider, cap=opts.article_cap)


def load_series(path) -> tuple[list, list[float]]:
    """CSV of date,value rows, header optional, in time order."""
    dates, values = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().lower() == "date":
                continue
            try:
                dates.append(corpus_mod.parse_timestamp(row[0].strip()).date())
                values.append(float(row[1]))
            except (CorpusError, IndexError, ValueError) as exc:
                raise ConfigError(f"series {path}: line {lineno}: {exc}") from exc
    if not values:
        raise ConfigError(f"series {path} holds no observations")
    return dates, values


def crowd_step(event: EventSpec, opts: PipelineOptions,
               as_of: datetime) -> dict | None:
    if not event.has_markets:
        return None
    markets_path = fixture_file(opts, opts.markets_path, "markets.json")
    if markets_path:
        client = FixtureMarketClient.from_file(markets_path)
    elif os.environ.get(MARKET_URL_ENV):
        client = HttpMarketClient(os.environ[MARKET_URL_ENV])
    else:
        raise ConfigError("event has markets but no quote source is "
                          f"configured (fixture file or {MARKET_URL_ENV})")
    ids = list(dict.fromkeys(
        ([event.direct_market] if event.direct_market else [])
        + [p.market_id for p in event.proxies]))
    quotes = {market_id: fetch_quote(market_id, client) for market_id in ids}
    days_out = (event.resolution_date - as_of.date()).days
    estimate = crowd_estimate(quotes, days_to_resolution=float(days_out),
                              direct_market=event.direct_market,
                              proxies=list(event.proxies) or None)
    return {
        "omega": estimate.omega,
        "p_inferred": estimate.p_inferred,
        "p_adjusted": estimate.p_adjusted,
        "decay_factor": estimate.decay_factor,
        "p_final": estimate.p_final,
        "days_to_resolution": days_out,
        "quotes": {m: {"p_yes": q.p_yes, "volume": q.volume}
                   for m, q in sorted(quotes.items())},
    }


def calibration_step(event: EventSpec, opts: PipelineOptions) -> dict | None:
    if event.kind is not EventKind.CONTINUOUS:
        return None
    threshold = event.threshold
    if opts.xhat is not None:
        forecast = calib.PointForecast(x_hat=opts.xhat, scale=1.0)
        source = "supplied"
    else:
        series_path = opts.series_path or (
            os.path.join(opts.fixture_dir, event.series_path)
            if opts.fixture_dir and event.series_path
            and not os.path.isabs(event.series_path)
            else event.series_path)
        if not series_path or not os.path.exists(series_path):
            return None
        dates, values = load_series(series_path)
        horizon = max(0, (event.resolution_date - dates[-1]).days)
        forecast = calib.baseline_forecast(values, horizon)
        source = "trend"
    p = calib.calibrate(forecast, threshold)
    return {
        "x_hat": forecast.x_hat,
        "scale": forecast.scale,
        "threshold": threshold.t,
        "direction": threshold.direction.value,
        "k": calib.SHARPNESS_K,
        "source": source,
        "p_yes": p,
    }


def run_pipeline(event: EventSpec, opts: PipelineOptions) -> PipelineResult:
    as_of = resolve_as_of(event, opts.as_of)
    notes: list[str] = []
    steps = ["ingest", "embed", "filter"]

    articles = ingest_step(event, opts)
    labels_path = fixture_file(opts, opts.labels_path, "labels.csv")
    labels = corpus_mod.load_labels(labels_path) if labels_path else {}

    backend = make_embed_backend(opts)
    embeddings = embed_articles(articles, backend)
    event_vec = backend.embed([event.summary_text])[0]
    by_id = {e.article_id: e for e in embeddings}
    articles_by_id = {a.id: a for a in articles}
    ages = {a.id: corpus_mod.age_days(a, as_of) for a in articles}

    labeled = [a for a in articles if a.id in labels]
    unlabeled = [a for a in articles if a.id not in labels]
    y_labeled = np.array([1 if labels[a.id] is corpus_mod.Outcome.YES else 0
                          for a in labeled])

    # Hand-labeled articles are curated training data; only the unlabeled
    # candidates face the relevance gate.
    filt = relevance_filter(event_vec, [by_id[a.id] for a in unlabeled],
                            tau=opts.tau)
    scoring = [articles_by_id[e.article_id] for e in filt.kept]

    p_pca = classifier = None
    steps.append("pca")
    if len(labeled) >= 3 and len(set(y_labeled.tolist())) == 2 and scoring:
        X_train = np.vstack([by_id[a.id].vector for a in labeled])
        try:
            classifier = pca_mod.PcaOutcomeClassifier().fit(X_train, y_labeled)
            scores = pca_mod.score_articles(classifier, filt.kept, ages)
            p_pca = pca_mod.aggregate_scores(scores)
        except (ValueError, AbstentionError) as exc:
            classifier, scores = None, []
            notes.append(f"pca abstained: {exc}")
    else:
        scores = []
        notes.append("pca abstained: needs labeled examples of both outcomes "
                     "and at least one scorable article")

    p_km = km_model = km_map = None
    km_weights = np.array([])
    cluster_articles = labeled + scoring
    steps.append("kmeans")
    if labeled and cluster_articles:
        X_cluster = np.vstack([by_id[a.id].vector for a in cluster_articles])
        try:
            km_model = kmeans_mod.TwoClusterKMeans(seed=opts.seed).fit(X_cluster)
            seed_labels = {i: int(y_labeled[i]) for i in range(len(labeled))}
            if classifier is not None:
                km_map = kmeans_mod.map_clusters_to_outcomes(
                    km_model, seed_labels,
                    mu_yes_top=classifier.selection_.mu_yes_top,
                    top_features=classifier.selection_.top_features)
            else:
                km_map = kmeans_mod.map_clusters_to_outcomes(km_model, seed_labels)
            pairs = [kmeans_mod.article_weight(d, ages[a.id])
                     for d, a in zip(km_model.distances_, cluster_articles)]
            km_weights = kmeans_mod.combine_weights([p[0] for p in pairs],
                                                    [p[1] for p in pairs])
            p_km = kmeans_mod.aggregate_mass(km_model, km_map, km_weights)
        except ValueError as exc:
            km_model = km_map = None
            km_weights = np.array([])
            notes.append(f"kmeans abstained: {exc}")
    else:
        notes.append("kmeans abstained: needs labeled seed articles and a "
                     "nonempty corpus")

    p_zs = None
    zs_detail = None
    steps.append("zeroshot")
    zs_path = fixture_file(opts, opts.zeroshot_path, "zeroshot.json")
    if scoring and (zs_path or os.environ.get(zs_mod.ENDPOINT_ENV)):
        client = (zs_mod.FixtureChatClient.from_file(zs_path) if zs_path
                  else zs_mod.HttpChatClient())
        verdicts = zs_mod.classify_batch(client, event, scoring,
                                         budget=opts.zeroshot_budget,
                                         parallelism=opts.zeroshot_parallelism)
        counts = {"yes": 0, "no": 0, "malformed": 0}
        for v in verdicts:
            counts[v.value.value] += 1
        try:
            p_zs = zs_mod.ratio(verdicts)
        except AbstentionError as exc:
            notes.append(f"zeroshot abstained: {exc}")
        zs_detail = {"classified": len(verdicts), **counts}
    else:
        notes.append("zeroshot abstained: no endpoint or script configured, "
                     "or nothing to classify")

    sna_detail = None
    p_sna = None
    try:
        p_sna, sna_eff, sna_notes = combine_weighted(
            {"pca": p_pca, "kmeans": p_km, "zeroshot": p_zs},
            event.sna_weights.as_dict(), "semantic")
        notes.extend(f"semantic: {n}" for n in sna_notes)
        sna_detail = {
            "pca": p_pca, "kmeans": p_km, "zeroshot": p_zs,
            "zeroshot_detail": zs_detail,
            "configured_weights": event.sna_weights.as_dict(),
            "effective_weights": sna_eff,
            "p_sna": p_sna,
        }
    except AbstentionError:
        notes.append("semantic analysis abstained: no submodule signal")
        if zs_detail is not None:
            sna_detail = {"pca": None, "kmeans": None, "zeroshot": None,
                          "zeroshot_detail": zs_detail, "p_sna": None}

    steps.append("crowd")
    crowd_detail = crowd_step(event, opts, as_of)
    if crowd_detail is None:
        notes.append("crowd abstained: no markets configured")

    steps.append("calibrate")
    calib_detail = calibration_step(event, opts)
    if event.kind is EventKind.CONTINUOUS and calib_detail is None:
        notes.append("trend abstained: no series or point forecast supplied")

    if event.macro_p_yes is None:
        notes.append("macro abstained: no analyst probability configured")

    steps.append("combine")
    modules = {
        "lstm": calib_detail["p_yes"] if calib_detail else None,
        "sna": p_sna,
        "crowd": crowd_detail["p_final"] if crowd_detail else None,
        "macro": event.macro_p_yes,
    }
    abstained = False
    try:
        forecast = combine_ipf(event.id, modules, event.ipf_weights)
        p_yes, p_no = forecast.p_yes, forecast.p_no
        effective = forecast.effective_weights
        notes.extend(forecast.notes)
    except AbstentionError:
        abstained = True
        p_yes = p_no = effective = None
        notes.append("forecast abstained: every module abstained")

    record = {
        "event_id": event.id,
        "statement": event.statement,
        "kind": event.kind.value,
        "as_of": as_of.isoformat(),
        "seed": opts.seed,
        "abstained": abstained,
        "p_yes": p_yes,
        "p_no": p_no,
        "modules": modules,
        "configured_weights": event.ipf_weights.as_dict(),
        "effective_weights": effective,
        "sna": sna_detail,
        "crowd": crowd_detail,
        "calibration": calib_detail,
        "counts": {
            "ingested": len(articles),
            "labeled": len(labeled),
            "candidates": len(unlabeled),
            "kept": filt.n_kept,
            "dropped": filt.n_dropped,
        },
        "notes": notes,
    }

    tables = _build_tables(classifier, scores, filt, labels, labeled, by_id,
                           km_model, km_map, km_weights, cluster_articles, ages)
    steps.append("report")
    inputs = {
        "config": opts.config_path,
        "articles": (os.path.join(opts.fixture_dir, "articles.json")
                     if opts.fixture_dir else None),
        "labels": labels_path,
        "markets": fixture_file(opts, opts.markets_path, "markets.json"),
        "zeroshot": zs_path,
    }
    manifest, paths = emit_report(record, tables, opts.out_dir, steps=steps,
                                  inputs=inputs, seed=opts.seed,
                                  as_of=as_of.isoformat())
    return PipelineResult(record=record, manifest=manifest, out_dir=opts.out_dir,
                          abstained=abstained, paths=paths)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _build_tables(classifier, scores, filt, labels, labeled_articles, by_id,
                  km_model, km_map, km_weights, cluster_articles,
                  ages) -> dict[str, list[list]]:
    """Per-article and per-component CSV bodies for the report."""
    tables: dict[str, list[list]] = {}

    scree = [["component", "eigenvalue", "variance_ratio", "cumulative"]]
    var_rows = [["article_id", "label", "pc1", "pc2"]]
    fisher_rows = [["article_id", "label", "pc_best", "pc_second"]]
    if classifier is not None:
        variance = classifier.variance_
        for i, (ev, ratio, cum) in enumerate(zip(
                classifier.model_.eigenvalues, variance.ratios,
                variance.cumulative), start=1):
            scree.append([i, _fmt(float(ev)), _fmt(float(ratio)), _fmt(float(cum))])

        sel = classifier.selection_
        rank = classifier.model_.rank
        var_pair = [0, 1] if rank >= 2 else [0, 0]
        order = [int(i) for i in np.argsort(-sel.fisher_scores, kind="stable")]
        second = next((i for i in order if i != sel.k_star), sel.k_star)
        fisher_pair = [sel.k_star, second]
        X_train = np.vstack([by_id[a.id].vector for a in labeled_articles])
        projected = classifier.transform(X_train)
        for article, row in zip(labeled_articles, projected):
            label = labels[article.id].value
            var_rows.append([article.id, label]
                            + [_fmt(float(row[i])) for i in var_pair])
            fisher_rows.append([article.id, label]
                               + [_fmt(float(row[i])) for i in fisher_pair])
    tables["scree.csv"] = scree
    tables["projection_top_variance.csv"] = var_rows
    tables["projection_top_fisher.csv"] = fisher_rows

    probs = [["article_id", "similarity", "age_days", "p_yes", "recency_weight"]]
    for s in scores:
        probs.append([s.article_id, _fmt(filt.similarities[s.article_id]),
                      _fmt(ages[s.article_id]), _fmt(s.p_yes),
                      _fmt(s.recency_weight)])
    tables["article_probs.csv"] = probs

    clusters = [["article_id", "cluster", "is_yes_cluster", "distance",
                 "weight", "role"]]
    if km_model is not None:
        for i, article in enumerate(cluster_articles):
            cluster = int(km_model.labels_[i]) + 1
            role = ("seed_" + labels[article.id].value
                    if article.id in labels else "scored")
            clusters.append([article.id, cluster,
                             int(cluster == km_map.yes_cluster),
                             _fmt(float(km_model.distances_[i])),
                             _fmt(float(km_weights[i])), role])
    tables["kmeans_clusters.csv"] = clusters
    return tables


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def summary_lines(record: dict) -> list[str]:
    lines = [f"# Forecast: {record['event_id']}", "",
             record["statement"], "",
             f"- kind: {record['kind']}",
             f"- as of: {record['as_of']}",
             f"- seed: {record['seed']}", "",
             "| module | probability | configured weight | effective weight |",
             "|---|---|---|---|"]
    effective = record.get("effective_weights") or {}
    for name in ("lstm", "sna", "crowd", "macro"):
        p = record["modules"].get(name)
        w = record["configured_weights"].get(name, 0.0)
        lines.append(
            f"| {name} | {'abstained' if p is None else f'{p:.5f}'} "
            f"| {w:g} | {effective.get(name, 0.0):.5f} |")
    lines.append("")
    if record["abstained"]:
        lines.append("**Forecast abstained: no module produced a signal.**")
    else:
        lines.append(f"**P(yes) = {record['p_yes']:.5f}   "
                     f"P(no) = {record['p_no']:.5f}**")
    if record["notes"]:
        lines.extend(["", "Notes:"] + [f"- {n}" for n in record["notes"]])
    return lines


def emit_report(record: dict, tables: dict[str, list[list]], out_dir,
                steps: list[str], inputs: dict, seed: int,
                as_of: str) -> tuple[dict, dict[str, str]]:
    os.makedirs(out_dir, exist_ok=True)
    paths: dict[str, str] = {}

    def write_text(name: str, text: str) -> None:
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths[name] = path

    write_text(FORECAST_FILE, json.dumps(record, sort_keys=True, indent=2) + "\n")
    write_text(SUMMARY_FILE, "\n".join(summary_lines(record)) + "\n")
    for name in TABLE_FILES:
        rows = tables.get(name, [[]])
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        paths[name] = path

    manifest = {
        "event_id": record["event_id"],
        "seed": seed,
        "as_of": as_of,
        "steps": steps,
        "inputs": {name: ({"path": str(p), "sha256": _digest(p)}
                          if p and os.path.exists(p) else None)
                   for name, p in inputs.items()},
        "outputs": {name: {"path": str(p), "sha256": _digest(p)}
                    for name, p in sorted(paths.items())},
    }
    write_text(MANIFEST_FILE, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest, paths


def run_many(events: list[EventSpec], opts: PipelineOptions) -> list[PipelineResult]:
    """Run every event into its own subdirectory plus a combined summary."""
    results = []
    for event in events:
        sub_opts = replace(opts, out_dir=os.path.join(opts.out_dir, event.id))
        results.append(run_pipeline(event, sub_opts))
    lines = ["# Forecasts", "",
             "| event | kind | P(yes) | P(no) | abstained |",
             "|---|---|---|---|---|"]
    for r in results:
        rec = r.record
        p_yes = "n/a" if rec["p_yes"] is None else f"{rec['p_yes']:.5f}"
        p_no = "n/a" if rec["p_no"] is None else f"{rec['p_no']:.5f}"
        lines.append(f"| {rec['event_id']} | {rec['kind']} | {p_yes} | {p_no} "
                     f"| {'yes' if rec['abstained'] else 'no'} |")
    os.makedirs(opts.out_dir, exist_ok=True)
    with open(os.path.join(opts.out_dir, SUMMARY_FILE), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return results
