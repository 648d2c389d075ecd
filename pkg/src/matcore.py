"""
Dense complex-matrix kernel: Pauli operators, Kronecker products, trace forms,
Hermitian spectra and positive-semidefiniteness checks.

Matrices are plain complex128 numpy arrays of shape (dim, dim).
"""

from functools import reduce
from typing import Iterable, Optional

import numpy as np

from config import MAX_DIM, TOLERANCES
from errors import ContractError, DimensionError, SizeError

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# sigma_x, sigma_y, sigma_z stacked on the first axis
PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


def as_matrix(entries) -> np.ndarray:
    """Coerce entries to a square complex128 array (copy)."""
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"Expected a non-empty square matrix, got shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Kronecker product a (x) b.

    Raises:
        SizeError: if the result would exceed MAX_DIM
    """
    dim = a.shape[0] * b.shape[0]
    if dim > MAX_DIM:
        raise SizeError(f"Kronecker product of dimension {dim} exceeds the limit {MAX_DIM}")
    return np.kron(a, b)


def kron_all(factors: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(kron, factors)


def trace(m: np.ndarray) -> complex:
    return complex(np.trace(m))


def trace_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(a b) without forming the product."""
    return complex(np.einsum("ij,ji->", a, b))


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise |m - m^dagger|."""
    return float(np.max(np.abs(m - dagger(m))))


def herm_eigvals(m: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Eigenvalues of a Hermitian matrix in descending order.

    Args:
        m: Square matrix, Hermitian within tol
        tol: Hermiticity tolerance (TOLERANCES['hermitian'] when None)

    Returns:
        Real array of m.shape[0] eigenvalues, largest first

    Raises:
        ContractError: if m is not Hermitian within tol
    """
    if tol is None:
        tol = TOLERANCES["hermitian"]
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ContractError(f"Matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    # symmetrize so LAPACK only sees the rounding-free Hermitian part
    values = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return values[::-1].copy()


def is_psd(m: np.ndarray, tol: Optional[float] = None) -> bool:
    """True iff every eigenvalue of the Hermitian matrix m is >= -tol."""
    if tol is None:
        tol = TOLERANCES["psd"]
    return bool(herm_eigvals(m)[-1] >= -tol)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases
