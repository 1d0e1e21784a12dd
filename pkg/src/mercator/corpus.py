"""News ingestion and durable article storage.

Articles arrive from HTTP news providers (or a directory of fixture
files), are matched against the event's keyword set and time window,
deduplicated by content hash, and stored one JSON object per line.
Published timestamps are UTC ISO-8601; ages are computed against an
injected clock so runs are reproducible.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import re
import time
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta, timezone

import requests

from .errors import CorpusError, ProviderAuthError, ProviderNetworkError
from .events import EventSpec

log = logging.getLogger(__name__)

DEFAULT_ARTICLE_CAP = 500
WINDOW_SKEW_DAYS = 1.0
RETRY_ATTEMPTS = 3
RETRY_BACKOFF_SECONDS = 0.5

ARTICLE_FIELDS = ("id", "source", "title", "body", "published_at", "url", "event_id")


class Outcome(enum.Enum):
    YES = "yes"
    NO = "no"


@dataclass(frozen=True)
class Article:
    id: str
    source: str
    title: str
    body: str
    published_at: str
    url: str
    event_id: str


@dataclass(frozen=True)
class Label:
    article_id: str
    outcome: Outcome


def article_id_for(url: str, title: str) -> str:
    """Providers re-serve identical stories; hash identity collapses them."""
    digest = hashlib.blake2b(digest_size=16)
    digest.update(url.encode("utf-8"))
    digest.update(b"\x1f")
    digest.update(title.encode("utf-8"))
    return digest.hexdigest()


def make_article(source: str, title: str, body: str, published_at: str,
                 url: str, event_id: str) -> Article:
    return Article(id=article_id_for(url, title), source=source, title=title,
                   body=body, published_at=published_at, url=url,
                   event_id=event_id)


def parse_timestamp(raw: str) -> datetime:
    try:
        stamp = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"bad timestamp {raw!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def age_days(article: Article, as_of: datetime) -> float:
    if as_of.tzinfo is None:
        as_of = as_of.replace(tzinfo=timezone.utc)
    delta = as_of - parse_timestamp(article.published_at)
    return delta.total_seconds() / 86400.0


def matches_keywords(article: Article, keywords) -> bool:
    text = f"{article.title}\n{article.body}".lower()
    for keyword in keywords:
        # Lookarounds instead of \b so keywords with symbol edges still
        # anchor to whole mentions.
        pattern = rf"(?<!\w){re.escape(keyword.lower())}(?!\w)"
        if re.search(pattern, text):
            return True
    return False


def within_window(article: Article, start: date, end: date,
                  skew_days: float = WINDOW_SKEW_DAYS) -> bool:
    stamp = parse_timestamp(article.published_at)
    lo = datetime(start.year, start.month, start.day, tzinfo=timezone.utc) \
        - timedelta(days=skew_days)
    hi = datetime(end.year, end.month, end.day, tzinfo=timezone.utc) \
        + timedelta(days=1 + skew_days)
    return lo <= stamp < hi


def dedupe(articles: list[Article]) -> list[Article]:
    seen = set()
    kept = []
    for article in articles:
        if article.id in seen:
            continue
        seen.add(article.id)
        kept.append(article)
    return kept


def fetch_articles(event: EventSpec, provider,
                   cap: int = DEFAULT_ARTICLE_CAP) -> list[Article]:
    """Pull candidates from the provider, keep those inside the event's
    window that mention at least one keyword, and cap the count.

    Over the cap, the most recent articles win.
    """
    candidates = provider.fetch(event, cap)
    kept = [a for a in dedupe(candidates)
            if within_window(a, event.window_start, event.window_end)
            and matches_keywords(a, event.keywords)]
    if len(kept) > cap:
        kept = sorted(kept, key=lambda a: (a.published_at, a.id),
                      reverse=True)[:cap]
    return kept


def store_corpus(articles: list[Article], path) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        for article in articles:
            fh.write(json.dumps(asdict(article), sort_keys=True) + "\n")
    return str(path)


def load_corpus(path) -> list[Article]:
    articles = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                articles.append(Article(**{k: raw[k] for k in ARTICLE_FIELDS}))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"corpus {path}: line {lineno}: {exc}") from exc
    return articles


def load_labels(path) -> dict[str, Outcome]:
    """CSV of article_id,outcome rows; header optional; one label each."""
    labels: dict[str, Outcome] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.lower().startswith("article_id"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise CorpusError(f"labels {path}: line {lineno}: expected "
                                  f"article_id,outcome")
            article_id, raw = parts
            try:
                outcome = Outcome(raw.lower())
            except ValueError as exc:
                raise CorpusError(f"labels {path}: line {lineno}: {exc}") from exc
            if article_id in labels:
                raise CorpusError(f"labels {path}: line {lineno}: duplicate "
                                  f"label for {article_id}")
            labels[article_id] = outcome
    return labels


class FixtureProvider:
    """Reads candidate documents from <dir>/articles.json, no network.

    Each document needs source, title, body, published_at, and url;
    hashing and filtering happen downstream like any other provider.
    """

    name = "fixture"

    def __init__(self, fixture_dir):
        self.fixture_dir = fixture_dir

    def fetch(self, event: EventSpec, cap: int) -> list[Article]:
        path = os.path.join(self.fixture_dir, "articles.json")
        try:
            with open(path, encoding="utf-8") as fh:
                docs = json.load(fh)
        except OSError as exc:
            raise CorpusError(f"fixture corpus {path} unreadable: {exc}") from exc
        return [make_article(source=d.get("source", "fixture"), title=d["title"],
                             body=d.get("body", ""), published_at=d["published_at"],
                             url=d["url"], event_id=event.id)
                for d in docs]


class HttpProvider:
    """Shared fetch plumbing: bounded retry with backoff, fatal on auth."""

    name = "http"
    env_var = ""

    def __init__(self, api_key: str | None = None,
                 session: requests.Session | None = None,
                 sleep=time.sleep):
        self.api_key = api_key if api_key is not None else os.environ.get(self.env_var, "")
        self._session = session or requests.Session()
        self._sleep = sleep

    def _get_json(self, url: str, params: dict) -> dict:
        last_exc: Exception | None = None
        for attempt in range(RETRY_ATTEMPTS):
            try:
                resp = self._session.get(url, params=params, timeout=30)
                if resp.status_code in (401, 403):
                    raise ProviderAuthError(
                        f"provider {self.name}: credential rejected "
                        f"({resp.status_code})")
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise requests.RequestException(f"status {resp.status_code}")
                resp.raise_for_status()
                return resp.json()
            except ProviderAuthError:
                raise
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
                if attempt + 1 < RETRY_ATTEMPTS:
                    self._sleep(RETRY_BACKOFF_SECONDS * 2 ** attempt)
        raise ProviderNetworkError(
            f"provider {self.name}: fetch failed after {RETRY_ATTEMPTS} "
            f"attempts: {last_exc}")

    def fetch(self, event: EventSpec, cap: int) -> list[Article]:
        raise NotImplementedError


class NewsApiProvider(HttpProvider):
    name = "newsapi"
    env_var = "MERCATOR_NEWSAPI_KEY"
    base_url = "https://newsapi.org/v2/everything"

    def fetch(self, event: EventSpec, cap: int) -> list[Article]:
        payload = self._get_json(self.base_url, {
            "q": " OR ".join(event.keywords),
            "from": event.window_start.isoformat(),
            "to": event.window_end.isoformat(),
            "pageSize": min(cap, 100),
            "apiKey": self.api_key,
        })
        return [make_article(source=(d.get("source") or {}).get("name", self.name),
                             title=d.get("title") or "",
                             body=d.get("content") or d.get("description") or "",
                             published_at=d.get("publishedAt") or "",
                             url=d.get("url") or "", event_id=event.id)
                for d in payload.get("articles", [])]


class NewsDataProvider(HttpProvider):
    name = "newsdata"
    env_var = "MERCATOR_NEWSDATA_KEY"
    base_url = "https://newsdata.io/api/1/archive"

    def fetch(self, event: EventSpec, cap: int) -> list[Article]:
        payload = self._get_json(self.base_url, {
            "q": " OR ".join(event.keywords),
            "from_date": event.window_start.isoformat(),
            "to_date": event.window_end.isoformat(),
            "apikey": self.api_key,
        })
        return [make_article(source=d.get("source_id", self.name),
                             title=d.get("title") or "",
                             body=d.get("content") or d.get("description") or "",
                             published_at=d.get("pubDate") or "",
                             url=d.get("link") or "", event_id=event.id)
                for d in payload.get("results", [])]


class MediaCloudProvider(HttpProvider):
    name = "mediacloud"
    env_var = "MERCATOR_MEDIACLOUD_KEY"
    base_url = "https://search.mediacloud.org/api/search/story-list"

    def fetch(self, event: EventSpec, cap: int) -> list[Article]:
        payload = self._get_json(self.base_url, {
            "q": " OR ".join(event.keywords),
            "start": event.window_start.isoformat(),
            "end": event.window_end.isoformat(),
            "key": self.api_key,
        })
        return [make_article(source=d.get("media_name", self.name),
                             title=d.get("title") or "",
                             body=d.get("text") or "",
                             published_at=d.get("publish_date") or "",
                             url=d.get("url") or "", event_id=event.id)
                for d in payload.get("stories", [])]


PROVIDERS = {cls.name: cls for cls in
             (NewsApiProvider, NewsDataProvider, MediaCloudProvider)}
