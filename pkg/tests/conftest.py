import numpy as np
import pytest

from metaot.measures import EmpiricalMeasure, build_meta, uniform_measure
from metaot.rng import substream


def random_1d_measure(rng, max_n=8, span=3.0, rational_weights=True):
    n = int(rng.integers(1, max_n + 1))
    pts = rng.uniform(-span, span, (n, 1))
    if rational_weights:
        w = rng.integers(1, 5, n).astype(float)
        w /= w.sum()
    else:
        w = np.full(n, 1.0 / n)
    return EmpiricalMeasure(pts, w)


def random_measure(rng, d, max_n=8, span=1.0):
    n = int(rng.integers(1, max_n + 1))
    return uniform_measure(rng.uniform(-span, span, (n, d)))


def random_meta(rng, N, n, d, span=1.0):
    return build_meta([uniform_measure(rng.uniform(-span, span, (n, d))) for _ in range(N)])


@pytest.fixture
def rng():
    return substream(20_240_801, "tests", 0)
