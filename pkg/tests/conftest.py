import numpy as np
import pytest

from beclab.hermite import HermiteBasis
from beclab.nls2d import Grid2D


@pytest.fixture(scope="session")
def basis12():
    return HermiteBasis()


@pytest.fixture(scope="session")
def small_grid():
    return Grid2D(n=8, L=4.0)


@pytest.fixture(scope="session")
def micro():
    """4x4x2 micro discretization used for brute-force oracles."""
    return Grid2D(n=4, L=4.0), HermiteBasis(mode_count=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20120)
