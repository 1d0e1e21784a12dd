import sys
from pathlib import Path

import pytest

# The wire-contract checker is shared with the primary package's test
# suite so both servers are held to the identical battery.
_SHARED_TESTS = Path(__file__).resolve().parents[2] / "tests"
if str(_SHARED_TESTS) not in sys.path:
    sys.path.insert(0, str(_SHARED_TESTS))


@pytest.fixture(scope="module")
def hash_service():
    """A live sidecar on the hash backend, yielding its base URL."""
    embed_sidecar = pytest.importorskip("embed_sidecar")
    app = embed_sidecar.create_app(embed_sidecar.HashEncoder(dim=64))
    with embed_sidecar.run_app(app) as base_url:
        yield base_url
