"""Tests for the seeded random matrix families."""
import numpy as np
import pytest

from sketchnorm.data import families
from sketchnorm.errors import ParameterError
from sketchnorm.linalg import oracle
from sketchnorm.linalg.matrix import row_norms_squared, to_dense


@pytest.mark.parametrize("family", families.FAMILIES)
def test_shape_and_determinism(family):
    a = families.make(family, 40, 6, np.random.default_rng(3))
    b = families.make(family, 40, 6, np.random.default_rng(3))
    assert a.shape == (40, 6)
    np.testing.assert_array_equal(to_dense(a), to_dense(b))


def test_unknown_family():
    with pytest.raises(ParameterError, match="unknown matrix family"):
        families.make("hilbert", 5, 5, np.random.default_rng(0))


def test_orthonormal_columns():
    q = families.orthonormal_columns(20, 5, np.random.default_rng(1))
    np.testing.assert_allclose(q.T @ q, np.eye(5), atol=1e-12)


def test_random_orthogonal():
    q = families.random_orthogonal(8, np.random.default_rng(2))
    np.testing.assert_allclose(q @ q.T, np.eye(8), atol=1e-12)


def test_with_singular_values():
    s = [3.0, 2.0, 0.5]
    m = families.with_singular_values(10, s, np.random.default_rng(4))
    np.testing.assert_allclose(np.linalg.svd(to_dense(m), compute_uv=False), s, rtol=1e-12)


def test_with_singular_values_needs_tall():
    with pytest.raises(ParameterError):
        families.with_singular_values(2, [1.0, 1.0, 1.0], np.random.default_rng(0))


def test_sparse_gaussian_density():
    m = families.sparse_gaussian(200, 50, np.random.default_rng(5), density=0.1)
    assert m.is_sparse
    assert 0.07 < m.storage.nnz / (200 * 50) < 0.13


def test_power_law_spectrum():
    m = families.power_law(30, 6, np.random.default_rng(6))
    assert oracle.exact_norm_sq(m) == pytest.approx(1.0, rel=1e-10)
    np.testing.assert_allclose(oracle.spectrum(m).eigenvalues, 1.0 / np.arange(1, 7) ** 2, rtol=1e-9)


def test_single_dominant_row():
    norms = row_norms_squared(families.single_dominant_row(100, 5, np.random.default_rng(7)))
    assert norms[0] > 0.5 * norms.sum()


def test_near_flat_spectrum():
    eigenvalues = oracle.spectrum(families.near_flat(20, 8, np.random.default_rng(8), epsilon=0.1)).eigenvalues
    assert eigenvalues.max() == pytest.approx(1.0, rel=1e-10)
    assert eigenvalues.min() == pytest.approx(1.0 - 0.001, rel=1e-10)


def test_boundary_gap_spectrum():
    eigenvalues = oracle.spectrum(families.boundary_gap(20, 6, np.random.default_rng(9), epsilon=0.2)).eigenvalues
    assert eigenvalues[0] == pytest.approx(1.0, rel=1e-10)
    assert eigenvalues[1] == pytest.approx(0.8, rel=1e-10)
    assert np.all(eigenvalues[2:] < 0.8)
