import sys
from pathlib import Path

import pytest

# Project root on the path so ``src`` imports resolve like in hrq.py
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.data.sources import GaussianSource, LaplaceSource, UniformSource  # noqa: E402


@pytest.fixture
def gaussian():
    return GaussianSource(0.0, 1.0)


@pytest.fixture
def uniform01():
    return UniformSource(0.0, 1.0)


@pytest.fixture
def laplace():
    return LaplaceSource(0.0, 1.0)
