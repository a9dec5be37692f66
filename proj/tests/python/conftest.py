import json
import os
from pathlib import Path

import pytest

FIXTURES = Path(os.environ.get("TOKENGRAFT_FIXTURE_DIR", Path(__file__).resolve().parents[1] / "fixtures"))


@pytest.fixture
def golden():
    return FIXTURES / "golden"


@pytest.fixture
def expected(golden):
    return json.loads((golden / "expected.json").read_text())
