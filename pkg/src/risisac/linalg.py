"""Dense complex linear algebra helpers used by the channel and SDR code.

Vectors and matrices are plain complex numpy arrays; the functions here
add the Hermitian bookkeeping (symmetry checks, ordered eigensystems)
that the rest of the package relies on.
"""

from dataclasses import dataclass

import numpy as np

HERM_RTOL = 1e-10


class LinalgError(ValueError):
    pass


class NonHermitian(LinalgError):
    pass


class NonFinite(LinalgError):
    pass


class DimensionMismatch(LinalgError):
    pass


@dataclass(frozen=True)
class HermEig:
    """Eigensystem of a Hermitian matrix, eigenvalues sorted descending."""

    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # unitary, columns match eigenvalues


def _check_square_finite(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix contains NaN or Inf entries")
    return m


def _check_hermitian(m: np.ndarray, rtol: float = HERM_RTOL) -> np.ndarray:
    m = _check_square_finite(m)
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.conj().T) > rtol * scale:
        raise NonHermitian("matrix is not Hermitian within tolerance")
    # absorb roundoff accumulated in channel products
    return (m + m.conj().T) / 2


def hermitian_eig(m: np.ndarray, rtol: float = HERM_RTOL) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    h = _check_hermitian(m, rtol)
    w, u = np.linalg.eigh(h)
    return HermEig(eigenvalues=w[::-1].copy(), eigenvectors=u[:, ::-1].copy())


def quad_form(x: np.ndarray, m: np.ndarray) -> float:
    """Real value of x^H m x for Hermitian m."""
    x = np.asarray(x, dtype=complex).ravel()
    m = _check_hermitian(m)
    if m.shape[0] != x.size:
        raise DimensionMismatch(
            f"vector length {x.size} does not match matrix dim {m.shape[0]}"
        )
    val = complex(x.conj() @ m @ x)
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1e-300):
        raise NonHermitian(f"quadratic form has imaginary residual {val.imag:g}")
    return val.real


def outer(x: np.ndarray) -> np.ndarray:
    """Conjugate outer product x x^H (Hermitian, PSD, rank one)."""
    x = np.asarray(x, dtype=complex).ravel()
    return np.outer(x, x.conj())
