import os
import sys

import pytest

# Modules live at the repository root
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from common import Rng  # noqa: E402


@pytest.fixture
def rng():
    return Rng(12345)
