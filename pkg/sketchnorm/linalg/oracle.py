"""Exact spectral norm at desk scale: cyclic Jacobi on the Gram matrix.

This is the reference every acceptance test compares against. It forms
AᵀA densely, so it is restricted to d <= SKETCHNORM_ORACLE_MAX_DIM
(default 512).
"""
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from sketchnorm.errors import NumericalError, ParameterError
from sketchnorm.linalg.matrix import Matrix

logger = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 512
DEFAULT_MAX_SWEEPS = 100
OFF_DIAGONAL_TOL = 1e-12


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "")
    try:
        return int(raw) if raw else default
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", name, raw)
        return default


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray  # descending
    sweeps_used: int
    off_diag_norm: float

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[0])


def max_dim() -> int:
    return _env_int("SKETCHNORM_ORACLE_MAX_DIM", DEFAULT_MAX_DIM)


def gram_matrix(m: Matrix, cap: int | None = None) -> np.ndarray:
    """Materialize AᵀA as a dense symmetric d x d array."""
    cap = max_dim() if cap is None else cap
    if m.n_cols > cap:
        raise ParameterError(
            f"oracle restricted to desk scale: d={m.n_cols} exceeds cap {cap}"
        )
    if m.is_sparse:
        g = (m.storage.T @ m.storage).toarray()
    else:
        g = m.storage.T @ m.storage
    # Symmetrize away the last-bit differences of the two triangles.
    return 0.5 * (g + g.T)


def _off_diagonal_norm(a: np.ndarray) -> float:
    # Summed directly: ||a||_F^2 - ||diag a||^2 cancels to rounding noise near convergence.
    return math.sqrt(2.0) * float(np.linalg.norm(np.triu(a, 1)))


def symmetric_eigenvalues(
    s: np.ndarray,
    tol: float = OFF_DIAGONAL_TOL,
    max_sweeps: int | None = None,
) -> SpectrumResult:
    """All eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit every (p, q) pair above the diagonal in row order and
    annihilate a[p, q] with a plane rotation. Iteration stops once the
    off-diagonal Frobenius norm is at most tol * ||s||_F.

    Args:
        s: Square symmetric array. Not modified.
        tol: Relative off-diagonal threshold.
        max_sweeps: Sweep limit (SKETCHNORM_JACOBI_MAX_SWEEPS, default 100).

    Returns:
        SpectrumResult with eigenvalues sorted descending.
    """
    a = np.array(s, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    if max_sweeps is None:
        max_sweeps = _env_int("SKETCHNORM_JACOBI_MAX_SWEEPS", DEFAULT_MAX_SWEEPS)
    n = a.shape[0]
    threshold = tol * float(np.linalg.norm(a))

    off = _off_diagonal_norm(a)
    sweeps = 0
    while off > threshold:
        if sweeps >= max_sweeps:
            raise NumericalError(
                f"Jacobi did not converge after {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e})",
                off_diag_norm=off,
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # After a few sweeps, entries below the diagonals' last bit are dropped.
                g = 100.0 * abs(apq)
                if sweeps > 3 and abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                # a <- Jᵀ a J, columns then rows
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - sn * row_q
                a[q, :] = sn * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
        sweeps += 1
        off = _off_diagonal_norm(a)
        logger.debug("Jacobi sweep %d: off-diagonal norm %.3e", sweeps, off)

    eigenvalues = np.sort(np.diag(a))[::-1].copy()
    return SpectrumResult(eigenvalues=eigenvalues, sweeps_used=sweeps, off_diag_norm=off)


def symmetric_norm(s: np.ndarray) -> float:
    """Spectral norm of a symmetric (possibly indefinite) matrix."""
    spectrum = symmetric_eigenvalues(s)
    return float(max(abs(spectrum.eigenvalues[0]), abs(spectrum.eigenvalues[-1])))


def spectrum(m: Matrix, cap: int | None = None) -> SpectrumResult:
    """Eigenvalues of AᵀA (the squared singular values), descending."""
    return symmetric_eigenvalues(gram_matrix(m, cap=cap))


def exact_norm_sq(m: Matrix, cap: int | None = None) -> float:
    """‖A‖² as the largest eigenvalue of AᵀA."""
    return max(spectrum(m, cap=cap).largest, 0.0)
