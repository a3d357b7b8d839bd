"""Seeded random test matrices for the Monte Carlo harness and the tests.

Families cover the cases the power-iteration analysis splits on: no
spectral structure (Gaussian), decaying spectra (power law), flat spectra
(every unit vector is already good), a gap sitting exactly at (1 - eps), and
row-norm skew (one dominant row).
"""
import numpy as np
from scipy import sparse

from sketchnorm.errors import ParameterError
from sketchnorm.linalg.matrix import Matrix

FAMILIES = (
    "gaussian",
    "sparse_gaussian",
    "power_law",
    "single_dominant_row",
    "near_flat",
    "boundary_gap",
)


def orthonormal_columns(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x d matrix with orthonormal columns (QR of a Gaussian)."""
    q, r = np.linalg.qr(rng.standard_normal((n, d)))
    # Column signs follow diag(r) so the result does not inherit QR's sign convention.
    return q * np.where(np.diag(r) < 0.0, -1.0, 1.0)


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    return orthonormal_columns(d, d, rng)


def with_singular_values(n: int, singular_values, rng: np.random.Generator) -> Matrix:
    """n x d dense matrix U diag(s) Vᵀ with random orthonormal U, V."""
    s = np.asarray(singular_values, dtype=np.float64)
    d = len(s)
    if n < d:
        raise ParameterError(f"need n >= d, got n={n}, d={d}")
    u = orthonormal_columns(n, d, rng)
    v = random_orthogonal(d, rng)
    return Matrix.from_dense((u * s) @ v.T)


def gaussian(n: int, d: int, rng: np.random.Generator) -> Matrix:
    return Matrix.from_dense(rng.standard_normal((n, d)))


def sparse_gaussian(n: int, d: int, rng: np.random.Generator, density: float = 0.1) -> Matrix:
    """CSR matrix with i.i.d. standard normal nonzeros at the given density."""
    mask = rng.random((n, d)) < density
    return Matrix.from_scipy(sparse.csr_array(rng.standard_normal((n, d)) * mask))


def power_law(n: int, d: int, rng: np.random.Generator, alpha: float = 1.0) -> Matrix:
    """Singular values i^-alpha, i = 1..d, randomly rotated."""
    return with_singular_values(n, np.arange(1, d + 1, dtype=np.float64) ** -alpha, rng)


def single_dominant_row(n: int, d: int, rng: np.random.Generator, weight: float = 50.0) -> Matrix:
    """Gaussian matrix whose first row is scaled up by `weight`."""
    values = rng.standard_normal((n, d))
    values[0] *= weight
    return Matrix.from_dense(values)


def near_flat(n: int, d: int, rng: np.random.Generator, epsilon: float = 0.1) -> Matrix:
    """sigma_i^2 spread over [1 - eps/100, 1]."""
    sq = 1.0 - (epsilon / 100.0) * np.linspace(0.0, 1.0, d)
    return with_singular_values(n, np.sqrt(sq), rng)


def boundary_gap(n: int, d: int, rng: np.random.Generator, epsilon: float = 0.1) -> Matrix:
    """sigma_1^2 = 1, sigma_2^2 = 1 - eps exactly, the rest spread below."""
    if d < 2:
        return with_singular_values(n, [1.0], rng)
    tail = (1.0 - epsilon) * np.linspace(1.0, 0.1, d - 1)
    return with_singular_values(n, np.sqrt(np.concatenate([[1.0], tail])), rng)


def make(family: str, n: int, d: int, rng: np.random.Generator, epsilon: float = 0.1) -> Matrix:
    """Draw one matrix from a named family."""
    if family == "gaussian":
        return gaussian(n, d, rng)
    if family == "sparse_gaussian":
        return sparse_gaussian(n, d, rng)
    if family == "power_law":
        return power_law(n, d, rng)
    if family == "single_dominant_row":
        return single_dominant_row(n, d, rng)
    if family == "near_flat":
        return near_flat(n, d, rng, epsilon=epsilon)
    if family == "boundary_gap":
        return boundary_gap(n, d, rng, epsilon=epsilon)
    raise ParameterError(f"unknown matrix family {family!r}; expected one of {FAMILIES}")
