"""Zero-shot article classification through a chat-completion endpoint.

Each article is judged independently against the event statement with a
fixed prompt demanding a bare ``{{YES}}`` / ``{{NO}}`` answer; anything
else counts as malformed, is retried once, and is then excluded from the
ratio estimate on both sides.
"""

from __future__ import annotations

import enum
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from .errors import AbstentionError, ChatServiceError, ConfigError

PROMPT_TEMPLATE = """You are a specialized classification agent.

Your task is to analyze news articles and determine whether each one indicates a "YES" or "NO" outcome for a specific binary event.

Objective:
Semantically analyze the news article using your full understanding of language and context. Determine which outcome cluster the article aligns with: YES or NO. Base your decision solely on the article content and its relevance to the event.

Output Format (Strict):
Respond with only one of the following, using ALL CAPS with double curly braces:
{{YES}}
{{NO}}

You must not provide any explanation, commentary, or additional text.

Event Context:
The binary event is: {{binary_event}}

Classify the Following News Article:
{{news_article}}

Enforcement Reminder:
Do not explain your choice. Do not output anything except {{YES}} or {{NO}}."""

DEFAULT_PARALLELISM = 4
ENDPOINT_ENV = "MERCATOR_CHAT_URL"
API_KEY_ENV = "MERCATOR_CHAT_KEY"
MODEL_ENV = "MERCATOR_CHAT_MODEL"


class VerdictValue(enum.Enum):
    YES = "yes"
    NO = "no"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class Verdict:
    article_id: str
    value: VerdictValue
    attempts: int


def build_prompt(event, article) -> str:
    """Fill the template with the event statement and the article text
    (title plus body; title alone when the body is empty)."""
    article_text = f"{article.title}\n\n{article.body}" if article.body else article.title
    return (PROMPT_TEMPLATE
            .replace("{{binary_event}}", event.statement)
            .replace("{{news_article}}", article_text))


def parse_verdict(completion_text: str) -> VerdictValue:
    """Accept exactly ``{{YES}}`` or ``{{NO}}`` after trimming whitespace."""
    text = completion_text.strip()
    if text == "{{YES}}":
        return VerdictValue.YES
    if text == "{{NO}}":
        return VerdictValue.NO
    return VerdictValue.MALFORMED


class HttpChatClient:
    """Generic chat-completion client: POST {model, messages, temperature}.

    Endpoint, API key, and model name come from the environment unless
    passed explicitly. Temperature is pinned to 0 so reruns are repeatable.
    """

    def __init__(self, endpoint: str | None = None, model: str | None = None,
                 api_key: str | None = None, timeout: float = 60.0,
                 session: requests.Session | None = None):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ConfigError(f"chat endpoint not configured (set {ENDPOINT_ENV})")
        self.model = model or os.environ.get(MODEL_ENV, "gpt-4o")
        self.api_key = api_key or os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: str, tag: str | None = None) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            resp = self._session.post(self.endpoint, json=body, headers=headers,
                                      timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise ChatServiceError(f"chat endpoint failed: {exc}") from exc


class FixtureChatClient:
    """Scripted client for offline runs.

    The script maps article ids to response sequences; each call consumes
    the next entry and the last entry repeats. ``tag`` routes the lookup
    (HTTP clients ignore it). Total calls are counted so tests can check
    budget accounting.
    """

    def __init__(self, responses: dict[str, list[str]] | None = None,
                 default: str = "{{YES}}"):
        self._responses = {k: list(v) for k, v in (responses or {}).items()}
        self._default = default
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_file(cls, path) -> "FixtureChatClient":
        with open(path, encoding="utf-8") as fh:
            script = json.load(fh)
        return cls(responses=script.get("responses", {}),
                   default=script.get("default", "{{YES}}"))

    def complete(self, prompt: str, tag: str | None = None) -> str:
        with self._lock:
            self.calls += 1
            queue = self._responses.get(tag)
            if not queue:
                return self._default
            return queue.pop(0) if len(queue) > 1 else queue[0]


def classify_batch(client, event, articles, budget: int,
                   parallelism: int = DEFAULT_PARALLELISM) -> list[Verdict]:
    """Classify up to ``budget`` articles, most recent first.

    A malformed answer is retried once and then kept as malformed, so the
    endpoint sees at most ``budget`` first attempts plus one retry each.
    Results come back sorted by article id regardless of completion order.
    """
    if budget < 1:
        raise ConfigError("zero-shot budget must be at least 1")
    chosen = sorted(articles, key=lambda a: (a.published_at, a.id), reverse=True)[:budget]

    def judge(article) -> Verdict:
        prompt = build_prompt(event, article)
        value = parse_verdict(client.complete(prompt, tag=article.id))
        attempts = 1
        if value is VerdictValue.MALFORMED:
            value = parse_verdict(client.complete(prompt, tag=article.id))
            attempts = 2
        return Verdict(article_id=article.id, value=value, attempts=attempts)

    if parallelism > 1 and len(chosen) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            verdicts = list(pool.map(judge, chosen))
    else:
        verdicts = [judge(a) for a in chosen]
    return sorted(verdicts, key=lambda v: v.article_id)


def ratio(verdicts: list[Verdict]) -> float:
    """Share of Yes among well-formed verdicts; malformed ones drop out of
    numerator and denominator alike."""
    yes = sum(1 for v in verdicts if v.value is VerdictValue.YES)
    no = sum(1 for v in verdicts if v.value is VerdictValue.NO)
    if yes + no == 0:
        raise AbstentionError("no well-formed verdicts: zero-shot has no signal")
    return yes / (yes + no)
