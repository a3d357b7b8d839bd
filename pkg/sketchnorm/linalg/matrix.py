"""Matrix storage (dense or row-compressed sparse) and the primitive products.

Every algorithm in sketchnorm touches the input through the handful of
functions in this module: matvec, gram_apply, row_norms_squared and
frobenius_sq. All arithmetic is float64.

Usage:
    from sketchnorm.linalg.matrix import Matrix, gram_apply

    m = Matrix.from_dense([[1.0, 2.0], [3.0, 4.0]])
    gram_apply(m, np.array([1.0, 0.0]))   # -> array([10., 14.])
"""
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from sketchnorm.errors import ParameterError

# Dense 1-D float64 array. Kept as an alias so signatures read like the domain.
Vector = np.ndarray


@dataclass(frozen=True, eq=False)
class Matrix:
    """Immutable real matrix, stored dense (row-major) or as a CSR array."""

    storage: np.ndarray | sparse.csr_array

    def __post_init__(self):
        n_rows, n_cols = self.storage.shape
        if n_rows < 1 or n_cols < 1:
            raise ParameterError(f"matrix must be at least 1x1, got {n_rows}x{n_cols}")

    @classmethod
    def from_dense(cls, values) -> "Matrix":
        """Copy a 2-D array-like into a read-only dense matrix."""
        arr = np.array(values, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise ParameterError(f"dense matrix must be 2-D, got {arr.ndim}-D")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("matrix entries must be finite")
        arr.flags.writeable = False
        return cls(arr)

    @classmethod
    def from_coo(cls, rows, cols, values, shape: tuple[int, int]) -> "Matrix":
        """Build a CSR matrix from (row, col, value) triplets.

        Duplicate coordinates are summed; entries that end up exactly zero
        are dropped so every stored value is nonzero.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n_rows, n_cols = shape
        if n_rows < 1 or n_cols < 1:
            raise ParameterError(f"matrix must be at least 1x1, got {n_rows}x{n_cols}")
        if not (len(rows) == len(cols) == len(values)):
            raise ParameterError("rows, cols and values must have equal length")
        if len(rows) and (rows.min() < 0 or rows.max() >= n_rows):
            raise ParameterError(f"row index out of range [0, {n_rows})")
        if len(cols) and (cols.min() < 0 or cols.max() >= n_cols):
            raise ParameterError(f"column index out of range [0, {n_cols})")
        if not np.all(np.isfinite(values)):
            raise ParameterError("matrix entries must be finite")
        coo = sparse.coo_array((values, (rows, cols)), shape=(n_rows, n_cols))
        return cls.from_scipy(coo)

    @classmethod
    def from_scipy(cls, mat) -> "Matrix":
        """Wrap any scipy sparse matrix/array as canonical CSR."""
        csr = sparse.csr_array(mat, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise ParameterError("matrix entries must be finite")
        return cls(csr)

    @property
    def n_rows(self) -> int:
        return int(self.storage.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.storage.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.storage)

    def __repr__(self) -> str:
        kind = "sparse" if self.is_sparse else "dense"
        return f"Matrix({kind}, {self.n_rows}x{self.n_cols}, nnz={nnz(self)})"


def _check_conforming(m: Matrix, x: Vector) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != m.n_cols:
        raise ParameterError(
            f"dimension mismatch: matrix has {m.n_cols} columns, vector has shape {x.shape}"
        )
    return x


def matvec(m: Matrix, x: Vector) -> Vector:
    """Return m @ x. Cost is proportional to nnz(m)."""
    x = _check_conforming(m, x)
    return np.asarray(m.storage @ x, dtype=np.float64)


def gram_apply(m: Matrix, x: Vector) -> Vector:
    """Return mᵀ(m x) as two products; mᵀm is never formed."""
    x = _check_conforming(m, x)
    return np.asarray(m.storage.T @ (m.storage @ x), dtype=np.float64)


def row_norms_squared(m: Matrix) -> Vector:
    """Squared Euclidean norm of every row, in one O(nnz) pass."""
    if m.is_sparse:
        csr = m.storage
        row_of_entry = np.repeat(np.arange(m.n_rows), np.diff(csr.indptr))
        return np.bincount(row_of_entry, weights=csr.data**2, minlength=m.n_rows)
    return np.einsum("ij,ij->i", m.storage, m.storage)


def frobenius_sq(m: Matrix) -> float:
    """Sum of squared entries."""
    values = m.storage.data if m.is_sparse else m.storage.ravel()
    return float(np.dot(values, values))


def nnz(m: Matrix) -> int:
    if m.is_sparse:
        return int(m.storage.nnz)
    return int(np.count_nonzero(m.storage))


def to_dense(m: Matrix) -> np.ndarray:
    """Return a writable dense copy."""
    if m.is_sparse:
        return m.storage.toarray()
    return np.array(m.storage)


def transpose(m: Matrix) -> Matrix:
    if m.is_sparse:
        return Matrix(m.storage.T.tocsr())
    return Matrix.from_dense(m.storage.T)


def transpose_if_wide(m: Matrix) -> Matrix:
    """Return a matrix with n_rows >= n_cols and the same spectral norm.

    Square and tall inputs come back unchanged (the same object).
    """
    if m.n_cols > m.n_rows:
        return transpose(m)
    return m


def scale(m: Matrix, c: float) -> Matrix:
    """Return c * m in the same storage kind."""
    if m.is_sparse:
        return Matrix.from_scipy(m.storage * float(c))
    return Matrix.from_dense(m.storage * float(c))


def max_abs(m: Matrix) -> float:
    values = m.storage.data if m.is_sparse else m.storage
    return float(np.max(np.abs(values))) if values.size else 0.0


def scale_pow2(m: Matrix, exponent: int) -> Matrix:
    """Return 2**exponent * m. Exact for any exponent that keeps entries normal."""
    if m.is_sparse:
        scaled = m.storage.copy()
        scaled.data = np.ldexp(scaled.data, exponent)
        return Matrix.from_scipy(scaled)
    return Matrix.from_dense(np.ldexp(m.storage, exponent))


def take_rows(m: Matrix, indices, weights) -> Matrix:
    """Return the matrix whose k-th row is weights[k] * m[indices[k]].

    Indices may repeat. Sparse input gives sparse output.
    """
    indices = np.asarray(indices, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if indices.ndim != 1 or indices.shape != weights.shape or len(indices) < 1:
        raise ParameterError("indices and weights must be equal-length, non-empty 1-D arrays")
    if m.is_sparse:
        # One nonzero per selector row, so each output entry is a single product.
        selector = sparse.csr_array(
            (weights, (np.arange(len(indices)), indices)),
            shape=(len(indices), m.n_rows),
        )
        return Matrix.from_scipy(selector @ m.storage)
    return Matrix.from_dense(m.storage[indices] * weights[:, None])
