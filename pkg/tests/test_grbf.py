import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsngc.embedding import delay_embed_ensemble
from lsngc.core import TimeSeriesEnsemble
from lsngc.errors import BadIndex, DimensionMismatch, TooFewPoints
from lsngc.grbf import GrbfCodebook, activations, kernel_width, kmeans, prune_centers


def best_two_partition(points):
    """Exhaustive search over all 2-partitions of the columns."""
    m = points.shape[1]
    best, best_centers = np.inf, None
    for mask in itertools.product([0, 1], repeat=m - 1):
        labels = np.array((0,) + mask)
        if labels.all() or not labels.any():
            continue
        c = np.stack([points[:, labels == j].mean(axis=1) for j in (0, 1)], axis=1)
        cost = sum(np.sum((points[:, labels == j] - c[:, [j]]) ** 2) for j in (0, 1))
        if cost < best:
            best, best_centers = cost, c
    return best_centers


def _sorted_cols(c):
    return c[:, np.lexsort(c[::-1])]


def test_kmeans_single_center_is_mean():
    x = np.random.default_rng(0).standard_normal((3, 40))
    np.testing.assert_allclose(kmeans(x, 1, seed=1)[:, 0], x.mean(axis=1), atol=1e-12)


def test_kmeans_two_blobs_matches_exhaustive_optimum():
    rng = np.random.default_rng(5)
    pts = np.hstack([rng.normal(0, 0.5, (2, 5)), rng.normal(10, 0.5, (2, 5))])
    expect = best_two_partition(pts)
    got = kmeans(pts, 2, seed=0)
    np.testing.assert_allclose(_sorted_cols(got), _sorted_cols(expect), atol=1e-12)
    np.testing.assert_allclose(_sorted_cols(got), _sorted_cols(
        np.stack([pts[:, :5].mean(axis=1), pts[:, 5:].mean(axis=1)], axis=1)), atol=1e-12)


def test_kmeans_too_few_points():
    with pytest.raises(TooFewPoints):
        kmeans(np.zeros((2, 3)), 4)


def test_kmeans_deterministic():
    x = np.random.default_rng(2).standard_normal((4, 200))
    assert np.array_equal(kmeans(x, 7, seed=9), kmeans(x, 7, seed=9))


def test_kmeans_repairs_empty_clusters():
    # duplicated points force k-means++ to choose coincident seeds
    x = np.repeat(np.array([[0.0, 1.0, 2.0]]), 4, axis=1)
    c = kmeans(x, 3, seed=0)
    assert sorted(c[0]) == [0.0, 1.0, 2.0]


@pytest.mark.parametrize(
    "centers, sigma",
    [
        (np.array([[0.0, 3.0, 0.0], [0.0, 0.0, 4.0]]), 4.0),
        (np.array([[0.0, 2.0]]), 2.0),
        (np.array([[1.5], [2.5]]), 1.0),
    ],
)
def test_kernel_width_examples(centers, sigma):
    assert kernel_width(centers) == pytest.approx(sigma, abs=1e-15)


def test_activation_examples():
    one = GrbfCodebook(np.array([[0.3]]), 1.0)
    np.testing.assert_array_equal(activations(np.array([[0.0, 5.0, -2.0]]), one), [[1.0, 1.0, 1.0]])
    two = GrbfCodebook(np.array([[0.0, 2.0]]), 1.0)
    np.testing.assert_allclose(activations(np.array([[1.0]]), two)[:, 0], [0.5, 0.5], atol=1e-15)
    # distances 0 and 1 with sigma 1: 1 / (1 + e^-1) and e^-1 / (1 + e^-1)
    dist = GrbfCodebook(np.array([[0.0, 1.0]]), 1.0)
    np.testing.assert_allclose(activations(np.array([[0.0]]), dist)[:, 0], [0.731059, 0.268941], atol=1e-6)
    with pytest.raises(DimensionMismatch):
        activations(np.zeros((3, 2)), dist)


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 6), st.integers(1, 12), st.integers(1, 20), st.integers(0, 2**32 - 1),
       st.floats(1e-2, 1e2))
def test_partition_of_unity(dim, c, m, seed, scale):
    rng = np.random.default_rng(seed)
    cb = GrbfCodebook(rng.standard_normal((dim, c)) * scale, float(rng.uniform(0.05, 5.0)))
    act = activations(rng.standard_normal((dim, m)) * scale, cb)
    assert np.all(act >= 0) and np.all(act <= 1)
    np.testing.assert_allclose(act.sum(axis=0), 1.0, atol=1e-12)


def test_activation_peaks_at_own_center():
    rng = np.random.default_rng(3)
    centers = rng.standard_normal((3, 6)) * 3
    cb = GrbfCodebook(centers, kernel_width(centers))
    act = activations(centers, cb)
    assert np.array_equal(np.argmax(act, axis=0), np.arange(6))


def test_prune_centers_layout():
    data = np.random.default_rng(0).standard_normal((3, 30))
    sp = delay_embed_ensemble(TimeSeriesEnsemble(data), 2)
    cb = GrbfCodebook.from_centers(kmeans(sp.states, 4, seed=0))
    pruned = prune_centers(cb, sp.source_dims, 0)
    np.testing.assert_array_equal(pruned.centers, cb.centers[2:])
    assert pruned.centers.shape[0] == (3 - 1) * 2
    assert pruned.sigma == pytest.approx(kernel_width(cb.centers[2:]))
    with pytest.raises(BadIndex):
        prune_centers(cb, sp.source_dims, 5)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_prune_d1_removes_single_row(n):
    data = np.random.default_rng(n).standard_normal((n, 20))
    sp = delay_embed_ensemble(TimeSeriesEnsemble(data), 1)
    cb = GrbfCodebook.from_centers(kmeans(sp.states, 3, seed=0))
    for s in range(n):
        np.testing.assert_array_equal(prune_centers(cb, sp, s).centers, np.delete(cb.centers, s, axis=0))
