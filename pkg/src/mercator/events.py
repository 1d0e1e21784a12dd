"""Event registry: the binary questions being forecast.

Events live in a JSON config file, either a single object or
{"events": [...]}. Each entry carries the question, its news query
(keywords and window), the analyst inputs (weights, macro prior), and
the market hookup. Continuous events add a threshold and optionally a
series file for the point forecaster.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from datetime import date

from .calibration import ThresholdDirection, ThresholdSpec
from .errors import ConfigError
from .ipf import IpfWeights, SnaWeights
from .markets import ProxySpec
from .validation import check_probability

DEFAULT_SNA_WEIGHTS = SnaWeights(alpha=0.5, beta=0.2, gamma=0.3)


class EventKind(enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class EventSpec:
    id: str
    statement: str
    kind: EventKind
    resolution_date: date
    keywords: tuple[str, ...]
    window_start: date
    window_end: date
    summary_text: str
    ipf_weights: IpfWeights
    sna_weights: SnaWeights = DEFAULT_SNA_WEIGHTS
    macro_p_yes: float | None = None
    threshold: ThresholdSpec | None = None
    direct_market: str | None = None
    proxies: tuple[ProxySpec, ...] = field(default=())
    series_path: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ConfigError("event id must be nonempty")
        if not self.keywords:
            raise ConfigError(f"event {self.id}: keywords must be nonempty")
        if self.window_start > self.window_end:
            raise ConfigError(f"event {self.id}: window start is after its end")
        if (self.threshold is not None) != (self.kind is EventKind.CONTINUOUS):
            raise ConfigError(
                f"event {self.id}: threshold must be present exactly for "
                f"continuous events")
        if self.macro_p_yes is not None:
            check_probability(self.macro_p_yes, f"event {self.id} macro_p_yes")

    @property
    def has_markets(self) -> bool:
        return self.direct_market is not None or bool(self.proxies)


def _parse_date(raw, what: str) -> date:
    try:
        return date.fromisoformat(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: bad date {raw!r}") from exc


def parse_event(raw: dict) -> EventSpec:
    if not isinstance(raw, dict):
        raise ConfigError("event entry must be an object")
    event_id = raw.get("id", "")
    where = f"event {event_id or '<missing id>'}"
    try:
        kind = EventKind(raw["kind"])
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc

    threshold = None
    if "threshold" in raw and raw["threshold"] is not None:
        t_raw = raw["threshold"]
        try:
            threshold = ThresholdSpec(t=float(t_raw["t"]),
                                      direction=ThresholdDirection(t_raw["direction"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: bad threshold: {exc}") from exc

    markets = raw.get("markets") or {}
    proxies = tuple(ProxySpec(market_id=p["market_id"], weight=float(p["weight"]))
                    for p in markets.get("proxies", []))

    sna_raw = raw.get("sna_weights")
    ipf_raw = raw.get("ipf_weights")
    if ipf_raw is None:
        raise ConfigError(f"{where}: missing ipf_weights")
    try:
        ipf_weights = IpfWeights(w_lstm=float(ipf_raw.get("lstm", 0.0)),
                                 w_sna=float(ipf_raw.get("sna", 0.0)),
                                 w_crowd=float(ipf_raw.get("crowd", 0.0)),
                                 w_macro=float(ipf_raw.get("macro", 0.0)))
        sna_weights = DEFAULT_SNA_WEIGHTS if sna_raw is None else SnaWeights(
            alpha=float(sna_raw["alpha"]), beta=float(sna_raw["beta"]),
            gamma=float(sna_raw["gamma"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad weights: {exc}") from exc

    window = raw.get("window") or {}
    try:
        macro = raw.get("macro_p_yes")
        return EventSpec(
            id=event_id,
            statement=raw["statement"],
            kind=kind,
            resolution_date=_parse_date(raw["resolution_date"], where),
            keywords=tuple(raw["keywords"]),
            window_start=_parse_date(window["start"], where),
            window_end=_parse_date(window["end"], where),
            summary_text=raw.get("summary_text", raw["statement"]),
            ipf_weights=ipf_weights,
            sna_weights=sna_weights,
            macro_p_yes=None if macro is None else float(macro),
            threshold=threshold,
            direct_market=markets.get("direct"),
            proxies=proxies,
            series_path=raw.get("series"),
        )
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc}") from exc


def load_events(path) -> list[EventSpec]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read event config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"event config {path} is not valid JSON: {exc}") from exc
    if isinstance(raw, dict) and "events" in raw:
        raw = raw["events"]
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"event config {path} holds no events")
    events = [parse_event(entry) for entry in raw]
    seen = set()
    for event in events:
        if event.id in seen:
            raise ConfigError(f"duplicate event id {event.id!r}")
        seen.add(event.id)
    return events


def find_event(events: list[EventSpec], event_id: str) -> EventSpec:
    for event in events:
        if event.id == event_id:
            return event
    known = ", ".join(e.id for e in events)
    raise ConfigError(f"unknown event {event_id!r} (known: {known})")
