import warnings

import numpy as np
import pytest

from gtsc.exceptions import DegenerateData, DimMismatch, NoConvergenceWarning
from gtsc.graph import (
    AffinityGraph,
    knn_graph,
    laplacian,
    laplacian_quadratic,
    spectral_norm,
    write_edge_list,
)
from gtsc.tensor import unfold

from oracles import knn_brute, laplacian_double_sum


def scalar_images(values):
    return np.asarray(values, dtype=float).reshape(1, -1, 1)


def random_graph(rng, n, p=0.4):
    w = np.triu((rng.random((n, n)) < p).astype(float), 1)
    return AffinityGraph(weights=w + w.T, q=0)


def test_two_images():
    g = knn_graph(scalar_images([0.0, 3.0]), q=1)
    np.testing.assert_array_equal(g.weights, [[0, 1], [1, 0]])


def test_three_scalars_path():
    g = knn_graph(scalar_images([0.0, 1.0, 10.0]), q=1)
    expected = knn_brute(np.array([[0.0], [1.0], [10.0]]), 1)
    np.testing.assert_array_equal(g.weights, expected)
    np.testing.assert_array_equal(np.argwhere(np.triu(g.weights)), [[0, 1], [1, 2]])


def test_identical_images_tie_break():
    g = knn_graph(np.ones((2, 5, 3)), q=1)
    w = g.weights
    np.testing.assert_array_equal(w, w.T)
    assert np.all(w.sum(axis=1) >= 1)
    # every node picks the lowest-index other node
    assert np.all(w[0, 1:] == 1)
    assert np.all(np.diag(w) == 0)


def test_strict_ties_raise():
    with pytest.raises(DegenerateData):
        knn_graph(np.ones((2, 5, 3)), q=1, strict_ties=True)


def test_q_range():
    with pytest.raises(DimMismatch):
        knn_graph(np.zeros((2, 3, 2)), q=3)
    with pytest.raises(DimMismatch):
        knn_graph(np.zeros((2, 3, 2)), q=0)


def test_knn_matches_brute_force(rng):
    x = rng.standard_normal((3, 12, 4))
    pts = [x[:, j, :].ravel() for j in range(12)]
    for q in (1, 3, 5):
        np.testing.assert_array_equal(knn_graph(x, q).weights, knn_brute(pts, q))


def test_knn_permutation_invariance(rng):
    x = rng.standard_normal((2, 10, 3))
    perm = rng.permutation(10)
    w = knn_graph(x, 3).weights
    wp = knn_graph(x[:, perm, :], 3).weights
    np.testing.assert_array_equal(wp, w[np.ix_(perm, perm)])


def test_laplacian_small():
    lap = laplacian(AffinityGraph(np.array([[0.0, 1.0], [1.0, 0.0]]), 1))
    np.testing.assert_array_equal(lap.L, [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(laplacian(AffinityGraph(np.zeros((3, 3)), 1)).L, np.zeros((3, 3)))


def test_laplacian_properties(rng):
    g = random_graph(rng, 9)
    lap = laplacian(g)
    np.testing.assert_allclose(lap.L.sum(axis=1), 0, atol=1e-12)
    np.testing.assert_array_equal(lap.L, lap.L.T)
    for _ in range(100):
        v = rng.standard_normal(9)
        assert v @ lap.L @ v >= -1e-12
        assert v @ lap.L @ v == pytest.approx(laplacian_double_sum(v[None, :], g.weights), rel=1e-10)
    assert np.linalg.eigvalsh(lap.L).min() == pytest.approx(0, abs=1e-12)


def test_quadratic_cases(rng):
    b = rng.standard_normal((2, 3, 4))
    assert laplacian_quadratic(b, laplacian(AffinityGraph(np.zeros((3, 3)), 1))) == 0
    same = np.repeat(rng.standard_normal((2, 1, 4)), 3, axis=1)
    path = AffinityGraph(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], float), 1)
    assert laplacian_quadratic(same, laplacian(path)) == pytest.approx(0, abs=1e-12)
    val = laplacian_quadratic(b, laplacian(path))
    assert val == pytest.approx(laplacian_double_sum(unfold(b), path.weights), rel=1e-10)


def test_quadratic_random(rng):
    for _ in range(10):
        g = random_graph(rng, 7)
        b = rng.standard_normal((3, 7, 5))
        expected = laplacian_double_sum(unfold(b), g.weights)
        assert laplacian_quadratic(b, laplacian(g)) == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_quadratic_dim_mismatch(rng):
    with pytest.raises(DimMismatch):
        laplacian_quadratic(rng.standard_normal((2, 4, 3)), laplacian(random_graph(rng, 5)))


def test_spectral_norm_known():
    assert spectral_norm(laplacian(AffinityGraph(np.zeros((4, 4)), 1))) == 0
    assert spectral_norm(np.array([[1.0, -1.0], [-1.0, 1.0]])) == pytest.approx(2, rel=1e-8)


def test_spectral_norm_matches_eigensolver(rng):
    for _ in range(20):
        lap = laplacian(random_graph(rng, 6, p=0.5))
        expected = np.linalg.eigvalsh(lap.L).max()
        assert spectral_norm(lap) == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_spectral_norm_warns_without_convergence(rng):
    lap = laplacian(random_graph(rng, 30, p=0.3))
    with pytest.warns(NoConvergenceWarning):
        est = spectral_norm(lap, max_iter=2)
    assert 0 < est <= np.linalg.eigvalsh(lap.L).max() + 1e-9


def test_spectral_norm_deterministic(rng):
    lap = laplacian(random_graph(rng, 15))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert spectral_norm(lap) == spectral_norm(lap)


def test_edge_list(tmp_path):
    g = knn_graph(scalar_images([0.0, 1.0, 10.0]), q=1)
    path = tmp_path / "edges.txt"
    write_edge_list(path, g)
    assert path.read_text() == "0 1 1\n1 2 1\n"
