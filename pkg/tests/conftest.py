import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from irsnet.scenario import default_scenario


@pytest.fixture(scope="session")
def sc():
    """Baseline scenario shared by read-only tests."""
    return default_scenario()
