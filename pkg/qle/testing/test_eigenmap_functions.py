import numpy as np
import pytest
import scipy.linalg

from qle.eigenmap_functions import (
    classical_embedding,
    embed,
    generalized_eigenpairs,
    normalize_sign,
    random_walk_matrix,
)
from qle.graph_functions import degree_and_laplacian, graph_from_weights, objective_value
from qle.models import ComputationError, ConfigError
from qle.testing.helpers import random_connected_bundles


def eigenvalues(bundle):
    return np.array([pair.eigenvalue for pair in generalized_eigenpairs(bundle)])


def test_path_two_spectrum(p2):
    pairs = generalized_eigenpairs(p2)
    np.testing.assert_allclose([pair.eigenvalue for pair in pairs], [0.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(pairs[1].vector, [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-12)


def test_path_three_spectrum(p3):
    np.testing.assert_allclose(eigenvalues(p3), [0.0, 1.0, 2.0], atol=1e-12)
    reference = scipy.linalg.eigh(p3.L, p3.D, eigvals_only=True)
    np.testing.assert_allclose(eigenvalues(p3), reference, atol=1e-10)


def test_complete_graph_spectrum(k4):
    values = eigenvalues(k4)
    np.testing.assert_allclose(values, [0.0, 4 / 3, 4 / 3, 4 / 3], atol=1e-12)
    assert list(values) == sorted(values)


def test_complete_graph_embedding_spans_the_degenerate_eigenspace(k4):
    embedding = classical_embedding(k4, 3)
    assert embedding.eigenvalues == pytest.approx((4 / 3,) * 3)
    np.testing.assert_allclose(embedding.Y.T @ k4.D @ embedding.Y, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(k4.L @ embedding.Y, 4 / 3 * (k4.D @ embedding.Y), atol=1e-12)


def test_isolated_vertex_is_reported():
    bundle = degree_and_laplacian(graph_from_weights([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(ComputationError, match="vertex 2"):
        generalized_eigenpairs(bundle)


def test_normalize_sign():
    assert normalize_sign(np.array([0.0, -1.0, 2.0])).tolist() == [0.0, 1.0, -2.0]
    assert normalize_sign(np.array([1e-12, 3.0])).tolist() == [1e-12, 3.0]


def test_generalized_eigenpairs_on_random_graphs():
    for bundle in random_connected_bundles(count=100):
        pairs = generalized_eigenpairs(bundle)
        V = np.column_stack([pair.vector for pair in pairs])
        values = np.array([pair.eigenvalue for pair in pairs])
        scale = max(1.0, float(np.max(bundle.degrees)))

        assert np.all(np.diff(values) >= 0)
        assert values[0] >= 0 and values[-1] <= 2 + 1e-10
        for pair in pairs:
            residual = bundle.L @ pair.vector - pair.eigenvalue * (bundle.D @ pair.vector)
            assert np.linalg.norm(residual) <= 1e-9 * scale
            significant = pair.vector[np.abs(pair.vector) > 1e-8]
            assert significant[0] > 0
        np.testing.assert_allclose(V.T @ bundle.D @ V, np.eye(bundle.m), atol=1e-9)

        # the zero mode of a connected graph is constant
        null = pairs[0].vector
        np.testing.assert_allclose(null, null[0], atol=1e-8)


def test_objective_of_embedding_column_is_twice_eigenvalue():
    for bundle in random_connected_bundles(count=20, seed=99):
        if bundle.m < 3:
            continue
        embedding = classical_embedding(bundle, 1)
        assert objective_value(bundle, embedding.Y) == pytest.approx(2 * embedding.eigenvalues[0], rel=1e-9)


def test_path_three_embedding(p3):
    embedding = classical_embedding(p3, 1)
    np.testing.assert_allclose(embedding.Y[:, 0], [1 / np.sqrt(2), 0.0, -1 / np.sqrt(2)], atol=1e-12)
    assert embedding.eigenvalues == pytest.approx((1.0,))


def test_path_three_two_columns(p3):
    embedding = classical_embedding(p3, 2)
    assert embedding.Y.shape == (3, 2)
    assert embedding.eigenvalues == pytest.approx((1.0, 2.0))
    np.testing.assert_allclose(embedding.Y[:, 1], [0.5, -0.5, 0.5], atol=1e-12)


def test_dimension_beyond_nonzero_spectrum(p2):
    with pytest.raises(ConfigError, match="requested d=2 but only 1"):
        classical_embedding(p2, 2)


def test_dimension_must_be_positive(p3):
    with pytest.raises(ConfigError):
        classical_embedding(p3, 0)


def test_one_zero_mode_dropped_per_component(two_p2):
    assert two_p2.components == 2
    np.testing.assert_allclose(eigenvalues(two_p2), [0.0, 0.0, 2.0, 2.0], atol=1e-12)
    assert classical_embedding(two_p2, 2).eigenvalues == pytest.approx((2.0, 2.0))
    with pytest.raises(ConfigError):
        classical_embedding(two_p2, 3)


def test_zero_mode_mismatch_is_a_computation_error(p3):
    pairs = generalized_eigenpairs(p3)
    with pytest.raises(ComputationError, match="zero threshold"):
        embed(pairs, 1, components=0)


def test_random_walk_matrix_shares_the_spectrum():
    for bundle in random_connected_bundles(count=30, seed=5):
        walk = np.sort(np.linalg.eigvals(random_walk_matrix(bundle)).real)
        np.testing.assert_allclose(walk, eigenvalues(bundle), atol=1e-9)
