"""Crowd probability from prediction markets.

An event either has a direct market (its price is the crowd probability)
or a basket of proxy markets with analyst weights. Proxy weights sum to
the basket's explanatory power, at most 1; the shortfall penalizes the
inferred probability. Quotes near their resolution date are softened to
damp last-week volatility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date

import requests

from .errors import ConfigError, MarketLookupError
from .validation import check_probability

RESOLUTION_WINDOW_DAYS = 7.0
WEIGHT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MarketQuote:
    market_id: str
    p_yes: float
    volume: float
    resolution_date: date | None = None
    fetched_at: str | None = None

    def __post_init__(self):
        check_probability(self.p_yes, f"market {self.market_id} p_yes")
        if self.volume < 0:
            raise ConfigError(f"market {self.market_id} volume must be nonnegative")


@dataclass(frozen=True)
class ProxySpec:
    """One proxy market and its analyst-assigned explanatory weight."""

    market_id: str
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise ConfigError(f"proxy {self.market_id} weight must be nonnegative")


@dataclass(frozen=True)
class CrowdEstimate:
    omega: float
    p_inferred: float
    p_adjusted: float
    decay_factor: float
    p_final: float


class FixtureMarketClient:
    """Quotes from a static JSON file: {market_id: {p_yes, volume, ...}}."""

    def __init__(self, quotes: dict[str, dict]):
        self._quotes = quotes

    @classmethod
    def from_file(cls, path) -> "FixtureMarketClient":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def get_quote(self, market_id: str) -> dict:
        if market_id not in self._quotes:
            raise MarketLookupError(f"unknown market id {market_id!r}")
        return self._quotes[market_id]


class HttpMarketClient:
    """GET {base_url}/markets/{id} returning the same quote shape."""

    def __init__(self, base_url: str, timeout: float = 30.0,
                 session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def get_quote(self, market_id: str) -> dict:
        try:
            resp = self._session.get(f"{self.base_url}/markets/{market_id}",
                                     timeout=self.timeout)
            if resp.status_code == 404:
                raise MarketLookupError(f"unknown market id {market_id!r}")
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise MarketLookupError(f"market {market_id!r} fetch failed: {exc}") from exc


def fetch_quote(market_id: str, client) -> MarketQuote:
    raw = client.get_quote(market_id)
    try:
        resolution = raw.get("resolution_date")
        return MarketQuote(
            market_id=market_id,
            p_yes=float(raw["p_yes"]),
            volume=float(raw.get("volume", 0.0)),
            resolution_date=date.fromisoformat(resolution) if resolution else None,
            fetched_at=raw.get("fetched_at"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MarketLookupError(f"malformed quote for {market_id!r}: {exc}") from exc


def direct_probability(quote: MarketQuote) -> float:
    """A market on the event itself speaks for the crowd as-is."""
    return quote.p_yes


def inferred_probability(proxies: list[ProxySpec],
                         quotes: dict[str, MarketQuote]) -> tuple[float, float]:
    """Explanatory power and the weight-normalized proxy probability.

    Normalizing by the weight sum keeps the estimate inside [0, 1] no
    matter how much of the event the basket explains.
    """
    if not proxies:
        raise ConfigError("no proxy markets configured")
    omega = sum(p.weight for p in proxies)
    if omega <= 0.0:
        raise ConfigError("proxy weights sum to zero")
    if omega > 1.0 + WEIGHT_SUM_TOLERANCE:
        raise ConfigError(f"proxy weights sum to {omega:.6f}, must not exceed 1")
    missing = [p.market_id for p in proxies if p.market_id not in quotes]
    if missing:
        raise MarketLookupError(f"missing quotes for proxies: {', '.join(missing)}")
    p_inferred = sum(p.weight / omega * quotes[p.market_id].p_yes for p in proxies)
    return omega, p_inferred


def adjusted_probability(omega: float, p_inferred: float) -> float:
    """Scale the inferred probability back by the basket's explanatory power,
    discounting whatever the proxies fail to cover."""
    return omega * p_inferred


def resolution_decay(p: float, days_to_resolution: float,
                     window_days: float = RESOLUTION_WINDOW_DAYS) -> tuple[float, float]:
    """Soften a quote inside the final week before resolution.

    The decay clock only starts ticking inside the window: a quote 7+ days
    out passes through untouched, one on resolution day is halved.
    """
    if days_to_resolution < 0:
        days_to_resolution = 0.0
    t_eff = max(0.0, window_days - days_to_resolution)
    factor = math.exp(-math.log(2.0) / window_days * t_eff)
    return factor, p * factor


def crowd_estimate(quotes: dict[str, MarketQuote], days_to_resolution: float,
                   direct_market: str | None = None,
                   proxies: list[ProxySpec] | None = None) -> CrowdEstimate:
    """Full crowd computation for one event: direct market if one exists,
    otherwise the weighted proxy basket; resolution decay applies to both."""
    if direct_market is not None:
        if direct_market not in quotes:
            raise MarketLookupError(f"missing quote for direct market {direct_market!r}")
        omega, p_inferred = 1.0, direct_probability(quotes[direct_market])
    elif proxies:
        omega, p_inferred = inferred_probability(proxies, quotes)
    else:
        raise ConfigError("event has neither a direct market nor proxies")
    p_adjusted = adjusted_probability(omega, p_inferred)
    factor, p_final = resolution_decay(p_adjusted, days_to_resolution)
    return CrowdEstimate(omega=omega, p_inferred=p_inferred, p_adjusted=p_adjusted,
                         decay_factor=factor, p_final=p_final)
