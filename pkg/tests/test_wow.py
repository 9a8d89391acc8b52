import itertools

import numpy as np
import pytest

from conftest import random_meta
from metaot.measures import build_meta, uniform_measure
from metaot.ot1d import wasserstein_1d
from metaot.rng import substream
from metaot.sqw_dsw import sw_wow
from metaot.wow import wow_distance_matrix, wow_exact


def test_identity():
    rng = substream(81, "wow-id", 0)
    a = random_meta(rng, 3, 4, 2)
    assert wow_exact(a, a) <= 1e-9


def test_single_dirac_metas():
    x = np.array([1.0, 2.0, 2.0])
    y = np.array([4.0, 6.0, 2.0])
    a = build_meta([uniform_measure(x[None, :])])
    b = build_meta([uniform_measure(y[None, :])])
    assert abs(wow_exact(a, b) - 5.0) < 1e-12


def test_two_by_two_against_outer_enumeration():
    # N = M = 2 metas of 1D measures: brute-force the two outer couplings
    # over exact inner 1D distances
    rng = substream(82, "wow-2x2", 0)
    a = random_meta(rng, 2, 2, 1)
    b = random_meta(rng, 2, 2, 1)
    inner = np.array([
        [wasserstein_1d(a.inner[i], b.inner[j]) ** 2 for j in range(2)]
        for i in range(2)
    ])
    best = np.inf
    for perm in itertools.permutations(range(2)):
        best = min(best, float(np.mean([inner[i, perm[i]] for i in range(2)])))
    # non-permutation vertices cannot improve on a 2x2 doubly stochastic LP
    assert abs(wow_exact(a, b) - np.sqrt(best)) < 1e-12


def test_entropic_inner_flag():
    rng = substream(83, "wow-ent", 0)
    a = random_meta(rng, 2, 4, 2)
    b = random_meta(rng, 2, 4, 2)
    exact = wow_exact(a, b, inner="exact")
    entropic = wow_exact(a, b, inner="entropic", epsilon=0.01)
    # entropic inner costs dominate the exact costs
    assert entropic >= exact - 1e-9


def test_inner_1d_routed_to_quantile_formula():
    rng = substream(84, "wow-1d", 0)
    a = random_meta(rng, 3, 5, 1)
    b = random_meta(rng, 3, 5, 1)
    # flag has no effect in d = 1: both go through the exact quantile route
    assert wow_exact(a, b, inner="exact") == wow_exact(a, b, inner="entropic")


def test_matrix_properties():
    rng = substream(85, "wow-matrix", 0)
    metas = [random_meta(rng, 2, 3, 2) for _ in range(3)]
    matrix = wow_distance_matrix(metas)
    np.testing.assert_array_equal(matrix, matrix.T)
    np.testing.assert_array_equal(np.diag(matrix), np.zeros(3))
    for i in range(3):
        for j in range(i + 1, 3):
            assert matrix[i, j] == wow_exact(metas[i], metas[j])

    identical = wow_distance_matrix([metas[0], metas[0]])
    assert np.max(np.abs(identical)) <= 1e-9


def test_metric_axioms_small_random():
    rng = substream(86, "wow-metric", 0)
    for _ in range(8):
        a = random_meta(rng, int(rng.integers(1, 5)), int(rng.integers(1, 7)), int(rng.integers(1, 4)))
        N, n, d = a.N, a.inner[0].n, a.d
        b = random_meta(rng, N, n, d)
        c = random_meta(rng, N, n, d)
        ab = wow_exact(a, b)
        assert abs(ab - wow_exact(b, a)) < 1e-9
        assert wow_exact(a, c) <= ab + wow_exact(b, c) + 1e-8


def test_sliced_lower_bound_sandwich():
    rng = substream(87, "wow-sandwich", 0)
    for k in range(20):
        a = random_meta(rng, 4, 6, 3)
        b = random_meta(rng, 4, 6, 3)
        sliced = sw_wow(a, b, 500, seed=k)
        assert sliced.value <= wow_exact(a, b) + 3.0 * sliced.std_error


def test_dimension_mismatch():
    rng = substream(88, "wow-dim", 0)
    with pytest.raises(ValueError, match="dimension mismatch"):
        wow_exact(random_meta(rng, 2, 3, 2), random_meta(rng, 2, 3, 3))
