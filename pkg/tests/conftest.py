import numpy as np
import pytest

from quasiplanes.tools.geometry import SampledSet


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def line_set():
    """33 samples of the segment [-1, 1] x {0} in the plane."""
    t = np.linspace(-1, 1, 33)
    return SampledSet(np.stack([t, np.zeros_like(t)], axis=1), meta={"n": 1})
