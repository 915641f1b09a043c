from __future__ import annotations

import numpy as np
import pytest

from csdlab.grid import Grid2D


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(20240811))


@pytest.fixture
def grid():
    return Grid2D(32, length=2.0 * np.pi)


@pytest.fixture
def grid_fine():
    return Grid2D(64, length=2.0 * np.pi)
