from pathlib import Path

import pytest

from smallchange_server.app import start_in_thread

# The golden fixture set bundled with the main toolkit; the server consumes it
# purely as a fixture-layout tree.
GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "data" / "golden"
GOLDEN_FIXTURES = GOLDEN / "fixtures"


@pytest.fixture(scope="module")
def golden_server():
    if not GOLDEN_FIXTURES.exists():
        pytest.fail(f"golden fixture set not found at {GOLDEN_FIXTURES}")
    server, thread = start_in_thread(GOLDEN_FIXTURES)
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    thread.join(timeout=5)
