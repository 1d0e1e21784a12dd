"""Command-line entry point.

Subcommands mirror the pipeline stages so each step can be run and
inspected on its own; `forecast` chains them end to end. Exit codes:
0 success, 2 configuration problem, 3 upstream service failure,
4 forecast abstained entirely (output still written).
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from datetime import datetime

import click

from . import corpus as corpus_mod
from . import pipeline as pipe
from .embedding import DEFAULT_DIM, DEFAULT_RELEVANCE_TAU, embed_articles, \
    relevance_filter
from .errors import (ChatServiceError, ConfigError, CorpusError,
                     EmbedServiceError, MarketLookupError, MercatorError,
                     ProviderError)
from .events import find_event, load_events

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UPSTREAM = 3
EXIT_ABSTAINED = 4


def parse_as_of(raw: str | None) -> datetime | None:
    if raw is None:
        return None
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ConfigError(f"bad --as-of value {raw!r}: {exc}") from exc


def guarded(fn):
    """Map domain errors to the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, CorpusError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (ProviderError, EmbedServiceError, ChatServiceError,
                MarketLookupError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_UPSTREAM)
        except MercatorError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)

    return wrapper


def common_options(fn):
    decorators = [
        click.option("--config", "config_path", default="events.json",
                     show_default=True, help="Event registry JSON file."),
        click.option("--event", "event_id", default=None,
                     help="Event id to operate on."),
        click.option("--fixture-dir", default=None,
                     help="Directory of offline fixtures (articles.json, "
                          "labels.csv, markets.json, zeroshot.json)."),
        click.option("--out", "out_dir", default="out", show_default=True,
                     help="Output directory."),
        click.option("--seed", default=0, show_default=True, type=int),
        click.option("--as-of", default=None,
                     help="Scoring instant, ISO-8601 (default: day after the "
                          "event window ends)."),
        click.option("--embed-backend", default="stub", show_default=True,
                     type=click.Choice(["stub", "service"])),
        click.option("--embed-url", default=None,
                     help="Embedding service base URL (service backend)."),
        click.option("--dim", "embed_dim", default=DEFAULT_DIM,
                     show_default=True, type=int),
        click.option("--tau", default=DEFAULT_RELEVANCE_TAU, show_default=True,
                     type=float, help="Relevance similarity threshold."),
        click.option("--labels", "labels_path", default=None,
                     help="CSV of article_id,outcome training labels."),
    ]
    for d in reversed(decorators):
        fn = d(fn)
    return fn


def build_options(**kw) -> pipe.PipelineOptions:
    return pipe.PipelineOptions(
        out_dir=kw.get("out_dir", "out"),
        seed=kw.get("seed", 0),
        as_of=parse_as_of(kw.get("as_of")),
        fixture_dir=kw.get("fixture_dir"),
        provider=kw.get("provider"),
        embed_backend=kw.get("embed_backend", "stub"),
        embed_url=kw.get("embed_url"),
        embed_dim=kw.get("embed_dim", DEFAULT_DIM),
        tau=kw.get("tau", DEFAULT_RELEVANCE_TAU),
        article_cap=kw.get("article_cap", corpus_mod.DEFAULT_ARTICLE_CAP),
        zeroshot_budget=kw.get("budget", 500),
        xhat=kw.get("xhat"),
        series_path=kw.get("series_path"),
        labels_path=kw.get("labels_path"),
        markets_path=kw.get("markets_path"),
        zeroshot_path=kw.get("zeroshot_path"),
        config_path=kw.get("config_path"),
    )


def load_one(config_path: str, event_id: str | None):
    if not event_id:
        raise ConfigError("--event is required")
    return find_event(load_events(config_path), event_id)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool):
    """Ensemble probability forecasts for binary economic events."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@common_options
@click.option("--provider", default=None,
              type=click.Choice(sorted(corpus_mod.PROVIDERS)),
              help="Live news provider (omit when using --fixture-dir).")
@click.option("--cap", "article_cap", default=corpus_mod.DEFAULT_ARTICLE_CAP,
              show_default=True, type=int, help="Max articles per event.")
@guarded
def ingest(config_path, event_id, **kw):
    """Fetch the event's articles and store them as a JSONL corpus."""
    event = load_one(config_path, event_id)
    opts = build_options(config_path=config_path, **kw)
    articles = pipe.ingest_step(event, opts)
    os.makedirs(opts.out_dir, exist_ok=True)
    path = corpus_mod.store_corpus(articles,
                                   os.path.join(opts.out_dir, "corpus.jsonl"))
    click.echo(f"stored {len(articles)} articles in {path}")


@main.command("filter")
@common_options
@click.option("--corpus", "corpus_path", default=None,
              help="Corpus JSONL (default: <out>/corpus.jsonl).")
@guarded
def filter_cmd(config_path, event_id, corpus_path, **kw):
    """Score corpus articles against the event summary and keep the relevant."""
    event = load_one(config_path, event_id)
    opts = build_options(config_path=config_path, **kw)
    corpus_path = corpus_path or os.path.join(opts.out_dir, "corpus.jsonl")
    articles = corpus_mod.load_corpus(corpus_path)
    labels_path = pipe.fixture_file(opts, opts.labels_path, "labels.csv")
    labels = corpus_mod.load_labels(labels_path) if labels_path else {}

    backend = pipe.make_embed_backend(opts)
    embeddings = embed_articles(articles, backend)
    event_vec = backend.embed([event.summary_text])[0]
    unlabeled = [e for e, a in zip(embeddings, articles) if a.id not in labels]
    result = relevance_filter(event_vec, unlabeled, tau=opts.tau)

    os.makedirs(opts.out_dir, exist_ok=True)
    kept_ids = {e.article_id for e in result.kept} | set(labels)
    kept_path = corpus_mod.store_corpus(
        [a for a in articles if a.id in kept_ids],
        os.path.join(opts.out_dir, "kept.jsonl"))
    report_path = os.path.join(opts.out_dir, "filter.csv")
    with open(report_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("article_id,similarity,kept\n")
        for a in articles:
            if a.id in labels:
                fh.write(f"{a.id},,1\n")
            else:
                s = result.similarities[a.id]
                fh.write(f"{a.id},{s!r},{int(a.id in kept_ids)}\n")
    click.echo(f"kept {result.n_kept} of {len(unlabeled)} candidate articles "
               f"(labeled pass-through: {len(labels)}); wrote {kept_path} "
               f"and {report_path}")


@main.group()
def sna():
    """Semantic news analysis submodules."""


def _run_and_pick(config_path, event_id, kw, picker):
    event = load_one(config_path, event_id)
    opts = build_options(config_path=config_path, **kw)
    result = pipe.run_pipeline(event, opts)
    click.echo(json.dumps(picker(result.record), sort_keys=True, indent=2))


@sna.command("pca")
@common_options
@guarded
def sna_pca(config_path, event_id, **kw):
    """Variance/Fisher path probability plus its report tables."""
    _run_and_pick(config_path, event_id, kw, lambda rec: {
        "p_pca": (rec["sna"] or {}).get("pca"),
        "out_dir": kw.get("out_dir", "out"),
        "notes": [n for n in rec["notes"] if "pca" in n],
    })


@sna.command("kmeans")
@common_options
@guarded
def sna_kmeans(config_path, event_id, **kw):
    """Cluster-mass probability plus the cluster table."""
    _run_and_pick(config_path, event_id, kw, lambda rec: {
        "p_kmeans": (rec["sna"] or {}).get("kmeans"),
        "out_dir": kw.get("out_dir", "out"),
        "notes": [n for n in rec["notes"] if "kmeans" in n],
    })


@sna.command("zeroshot")
@common_options
@click.option("--budget", default=500, show_default=True, type=int,
              help="Max articles sent to the classifier, most recent first.")
@click.option("--script", "zeroshot_path", default=None,
              help="Scripted responses JSON (default: "
                   "<fixture-dir>/zeroshot.json).")
@guarded
def sna_zeroshot(config_path, event_id, **kw):
    """Zero-shot Yes ratio over the kept articles."""
    _run_and_pick(config_path, event_id, kw, lambda rec: {
        "p_zeroshot": (rec["sna"] or {}).get("zeroshot"),
        "detail": (rec["sna"] or {}).get("zeroshot_detail"),
        "notes": [n for n in rec["notes"] if "zeroshot" in n],
    })


@main.command()
@common_options
@click.option("--fixture", "markets_path", default=None,
              help="Quotes JSON (default: <fixture-dir>/markets.json).")
@guarded
def crowd(config_path, event_id, **kw):
    """Prediction-market probability for the event."""
    event = load_one(config_path, event_id)
    opts = build_options(config_path=config_path, **kw)
    as_of = pipe.resolve_as_of(event, opts.as_of)
    detail = pipe.crowd_step(event, opts, as_of)
    if detail is None:
        click.echo(json.dumps({"abstained": True,
                               "reason": "no markets configured"}, indent=2))
        return
    click.echo(json.dumps(detail, sort_keys=True, indent=2))


@main.command()
@common_options
@click.option("--series", "series_path", default=None,
              help="CSV of date,value observations.")
@click.option("--xhat", default=None, type=float,
              help="Externally supplied point forecast (skips the trend fit).")
@guarded
def calibrate(config_path, event_id, **kw):
    """Threshold-crossing probability for a continuous event."""
    event = load_one(config_path, event_id)
    opts = build_options(config_path=config_path, **kw)
    detail = pipe.calibration_step(event, opts)
    if detail is None:
        raise ConfigError(
            "calibration needs a continuous event and either --series or "
            "--xhat")
    click.echo(json.dumps(detail, sort_keys=True, indent=2))


@main.command()
@common_options
@click.option("--all", "run_all", is_flag=True,
              help="Forecast every event in the config file.")
@click.option("--budget", default=500, show_default=True, type=int)
@click.option("--xhat", default=None, type=float)
@click.option("--series", "series_path", default=None)
@click.option("--markets", "markets_path", default=None)
@click.option("--script", "zeroshot_path", default=None)
@guarded
def forecast(config_path, event_id, run_all, **kw):
    """Run the full pipeline and write the forecast with its audit trail."""
    events = load_events(config_path)
    opts = build_options(config_path=config_path, **kw)
    if run_all:
        if event_id:
            raise ConfigError("--all and --event are mutually exclusive")
        results = pipe.run_many(events, opts)
        for r in results:
            rec = r.record
            shown = "abstained" if rec["abstained"] else f"{rec['p_yes']:.5f}"
            click.echo(f"{rec['event_id']}: P(yes) = {shown}")
        click.echo(f"wrote {len(results)} forecasts under {opts.out_dir}")
        if all(r.abstained for r in results):
            sys.exit(EXIT_ABSTAINED)
        return
    if not event_id:
        raise ConfigError("--event is required (or pass --all)")
    event = find_event(events, event_id)
    result = pipe.run_pipeline(event, opts)
    rec = result.record
    if result.abstained:
        click.echo(f"{rec['event_id']}: abstained (no module signal); "
                   f"output in {result.out_dir}")
        sys.exit(EXIT_ABSTAINED)
    click.echo(f"{rec['event_id']}: P(yes) = {rec['p_yes']:.5f}  "
               f"P(no) = {rec['p_no']:.5f}")
    click.echo(f"wrote {result.out_dir}/forecast.json")


@main.command()
@click.option("--out", "out_dir", default="out", show_default=True,
              help="Directory holding forecast.json.")
@guarded
def report(out_dir):
    """Print the human-readable summary for an existing forecast."""
    path = os.path.join(out_dir, pipe.FORECAST_FILE)
    try:
        with open(path, encoding="utf-8") as fh:
            record = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"no forecast at {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"forecast {path} is not valid JSON: {exc}") from exc
    text = "\n".join(pipe.summary_lines(record)) + "\n"
    with open(os.path.join(out_dir, pipe.SUMMARY_FILE), "w",
              encoding="utf-8") as fh:
        fh.write(text)
    click.echo(text, nl=False)


if __name__ == "__main__":
    main()
