import json

import pytest

from mercator.corpus import make_article


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(num, text): tags a test with the acceptance "
        "criterion it verifies")
    config._criterion_results = {}


def pytest_runtest_makereport(item, call):
    if call.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, text = marker.args
    results = item.config._criterion_results
    passed = call.excinfo is None
    # A criterion may span several tests; any failure fails the line.
    prev_ok, _ = results.get(num, (True, text))
    results[num] = (prev_ok and passed, text)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criterion_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, text = results[num]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num}: {text}")


@pytest.fixture
def article_factory():
    """Builds articles with sane defaults; tests override what matters."""

    def build(n=0, title=None, body="", published_at="2025-10-01T12:00:00+00:00",
              url=None, source="wire", event_id="evt"):
        title = title if title is not None else f"story {n}"
        url = url or f"https://news.example/{n}"
        return make_article(source=source, title=title, body=body,
                            published_at=published_at, url=url,
                            event_id=event_id)

    return build


@pytest.fixture
def event_config(tmp_path):
    """Writes a single-event registry and returns (config_path, event_dict)."""

    def build(**overrides):
        event = {
            "id": "evt",
            "statement": "Tariffs on widgets will be lifted this year.",
            "kind": "discrete",
            "resolution_date": "2025-12-31",
            "keywords": ["tariff", "widget"],
            "window": {"start": "2025-09-01", "end": "2025-10-31"},
            "summary_text": "tariff widget trade policy lift",
            "macro_p_yes": 0.56,
            "ipf_weights": {"lstm": 0.0, "sna": 0.5, "crowd": 0.1,
                            "macro": 0.4},
            "sna_weights": {"alpha": 0.5, "beta": 0.2, "gamma": 0.3},
        }
        event.update(overrides)
        path = tmp_path / "events.json"
        path.write_text(json.dumps({"events": [event]}))
        return path, event

    return build
