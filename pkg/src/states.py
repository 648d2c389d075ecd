"""
State factory and validator for every family used on the entropy-nonlocality
plane: Bell states, GHZ, MEMS, the two- and three-qubit MNMS, the diagonal
mixture, the planar correlation state and the GHZ bit-flip channel output.

Basis order is big-endian binary: |00>, |01>, |10>, |11> and |000> ... |111>.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import TOLERANCES
from errors import ContractError, DimensionError, DomainError
from matcore import (
    PAULI_X, PAULI_Y, as_matrix, dagger, hermiticity_defect, kron, kron_all,
    trace,
)

logger = logging.getLogger(__name__)

SQRT_HALF = 1 / np.sqrt(2)


# =============================================================================
# DENSITY MATRIX CARRIER
# =============================================================================

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Immutable N-qubit density matrix of dimension 2^N.

    Raises:
        DimensionError: dimension is not 2^qubits
        ContractError: the matrix is not Hermitian, unit-trace and PSD
    """

    qubits: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = as_matrix(self.mat)
        if m.shape[0] != 2 ** self.qubits:
            raise DimensionError(
                f"{self.qubits} qubits need dimension {2 ** self.qubits}, got {m.shape[0]}"
            )
        report = validate(m)
        if not report.passed:
            raise ContractError("Not a density matrix: " + "; ".join(report.failures))
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_matrix(cls, entries) -> "DensityMatrix":
        """
        Wrap a square matrix, inferring the qubit count from its dimension.

        Raises:
            DimensionError: dimension is not a power of two
            ContractError: the matrix is not a valid state
        """
        m = as_matrix(entries)
        qubits = int(round(np.log2(m.shape[0])))
        if 2 ** qubits != m.shape[0]:
            raise DimensionError(f"Dimension {m.shape[0]} is not a power of two")
        return cls(qubits, m)

    def to_json(self) -> Dict:
        flat = self.mat.reshape(-1)
        return {
            "qubits": self.qubits,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json(cls, doc: Dict) -> "DensityMatrix":
        qubits = int(doc["qubits"])
        dim = 2 ** qubits
        pairs = doc["entries"]
        if len(pairs) != dim * dim:
            raise DimensionError(
                f"State document has {len(pairs)} entries, expected {dim * dim}"
            )
        flat = np.array([complex(re, im) for re, im in pairs], dtype=complex)
        rho = cls.from_matrix(flat.reshape(dim, dim))
        if rho.qubits != qubits:
            raise DimensionError("Qubit count disagrees with entries")
        return rho


# =============================================================================
# VALIDATION
# =============================================================================

@dataclass(frozen=True)
class ValidationReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    failures: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures


def validate(rho, hermitian_tol: Optional[float] = None,
             trace_tol: Optional[float] = None,
             psd_tol: Optional[float] = None) -> ValidationReport:
    """
    Check Hermiticity, unit trace and positivity of a state or raw matrix.

    Never raises for a square input; failures are listed on the report.
    """
    hermitian_tol = TOLERANCES["hermitian"] if hermitian_tol is None else hermitian_tol
    trace_tol = TOLERANCES["trace"] if trace_tol is None else trace_tol
    psd_tol = TOLERANCES["psd"] if psd_tol is None else psd_tol

    m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    h_defect = hermiticity_defect(m)
    t_defect = abs(trace(m) - 1)
    # eigenvalues of the Hermitian part, so a defective input still gets a report
    min_eig = float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0])

    failures: List[str] = []
    if h_defect > hermitian_tol:
        failures.append(f"hermiticity defect {h_defect:.3e}")
    if t_defect > trace_tol:
        failures.append(f"trace defect {t_defect:.3e}")
    if min_eig < -psd_tol:
        failures.append(f"minimum eigenvalue {min_eig:.3e}")
    return ValidationReport(h_defect, t_defect, min_eig, tuple(failures))


# =============================================================================
# STATE FAMILIES
# =============================================================================

class FamilyTag(str, Enum):
    BELL_PHI_PLUS = "bell_phi_plus"
    BELL_PSI_PLUS = "bell_psi_plus"
    GHZ = "ghz"
    MEMS = "mems"
    MNMS2 = "mnms2"
    MNMS3 = "mnms3"
    DIAG_MIX = "diag_mix"
    PLANAR2 = "planar2"
    GHZ_BIT_FLIP = "ghz_bit_flip"


# Closed parameter intervals; None for parameter-free families
FAMILY_DOMAINS: Dict[FamilyTag, Optional[Tuple[float, float]]] = {
    FamilyTag.BELL_PHI_PLUS: None,
    FamilyTag.BELL_PSI_PLUS: None,
    FamilyTag.GHZ: None,
    FamilyTag.MEMS: (0.0, 1.0),
    FamilyTag.MNMS2: (-1.0, 1.0),
    FamilyTag.MNMS3: (0.0, 1 / 8),
    FamilyTag.DIAG_MIX: (0.0, 1.0),
    FamilyTag.PLANAR2: (0.0, 0.5),   # (1 - 2*lambda)/4 is an eigenvalue
    FamilyTag.GHZ_BIT_FLIP: (0.0, 1 / 8),
}

FAMILY_QUBITS: Dict[FamilyTag, int] = {
    FamilyTag.BELL_PHI_PLUS: 2,
    FamilyTag.BELL_PSI_PLUS: 2,
    FamilyTag.GHZ: 3,
    FamilyTag.MEMS: 2,
    FamilyTag.MNMS2: 2,
    FamilyTag.MNMS3: 3,
    FamilyTag.DIAG_MIX: 2,
    FamilyTag.PLANAR2: 2,
    FamilyTag.GHZ_BIT_FLIP: 3,
}


@dataclass(frozen=True)
class StateFamily:
    tag: FamilyTag
    parameter: Optional[float] = None

    @classmethod
    def parse(cls, tag: str, parameter: Optional[float] = None) -> "StateFamily":
        try:
            family_tag = FamilyTag(tag.lower())
        except ValueError:
            known = ", ".join(t.value for t in FamilyTag)
            raise DomainError(f"Unknown state family '{tag}' (known: {known})") from None
        return cls(family_tag, None if parameter is None else float(parameter))

    @property
    def qubits(self) -> int:
        return FAMILY_QUBITS[self.tag]


def _projector(ket: Sequence[complex]) -> np.ndarray:
    v = np.asarray(ket, dtype=complex)
    return np.outer(v, np.conj(v))


def _basis_ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def _cat_ket(bits: str) -> np.ndarray:
    """(|bits> + |complement of bits>)/sqrt(2)."""
    flipped = "".join("1" if b == "0" else "0" for b in bits)
    return SQRT_HALF * (_basis_ket(bits) + _basis_ket(flipped))


def _check_domain(family: StateFamily) -> float:
    domain = FAMILY_DOMAINS[family.tag]
    if domain is None:
        return 0.0
    if family.parameter is None:
        raise DomainError(f"Family '{family.tag.value}' needs a parameter in [{domain[0]}, {domain[1]}]")
    x = float(family.parameter)
    lo, hi = domain
    if not (lo <= x <= hi):
        raise DomainError(f"Parameter {x} outside [{lo}, {hi}] for family '{family.tag.value}'")
    return x


def mems_matrix(gamma: float) -> np.ndarray:
    g = 1 / 3 if gamma < 2 / 3 else gamma / 2
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = g
    m[1, 1] = 1 - 2 * g
    m[0, 3] = m[3, 0] = gamma / 2
    return m


def mnms2_matrix(gamma: float) -> np.ndarray:
    """(1+gamma)/2 |Phi+><Phi+| + (1-gamma)/2 |Psi+><Psi+| written entrywise."""
    plus, minus = (1 + gamma) / 4, (1 - gamma) / 4
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = m[0, 3] = m[3, 0] = plus
    m[1, 1] = m[2, 2] = m[1, 2] = m[2, 1] = minus
    return m


def x_state(coherences: Sequence[float]) -> DensityMatrix:
    """
    Three-qubit X-form with anti-diagonal entries c_1..c_4 and matching
    diagonal rho_mm = rho_nn = |c_m|, n = 9 - m.

    Raises:
        DomainError: if 2 * sum|c_m| != 1
    """
    c = np.asarray(coherences, dtype=complex)
    if c.shape != (4,):
        raise DimensionError("An X-state needs exactly four coherences")
    total = 2 * float(np.sum(np.abs(c)))
    if abs(total - 1) > TOLERANCES["trace"]:
        raise DomainError(f"X-state coherences give trace {total}, expected 1")
    m = np.zeros((8, 8), dtype=complex)
    for k in range(4):
        n = 7 - k
        m[k, k] = m[n, n] = abs(c[k])
        m[k, n] = c[k]
        m[n, k] = np.conj(c[k])
    return DensityMatrix(3, m)


def mnms3_coherences(f: float) -> List[float]:
    f1 = 0.5 - 3 * f
    return [f1, f, f, f]


def ghz_bit_flip_matrix(f: float) -> np.ndarray:
    """GHZ after a channel flipping exactly one spin, each with probability 2f."""
    f1 = 0.5 - 3 * f
    m = 2 * f1 * _projector(_cat_ket("000"))
    for flipped in ("100", "010", "001"):
        m = m + 2 * f * _projector(_cat_ket(flipped))
    return m


def planar2_matrix(lam: float) -> np.ndarray:
    """Zero local vectors and correlation matrix diag(lam, lam, 0)."""
    corr = kron(PAULI_X, PAULI_X) + kron(PAULI_Y, PAULI_Y)
    return (np.eye(4, dtype=complex) + lam * corr) / 4


def make_state(family: StateFamily) -> DensityMatrix:
    """
    Build the density matrix of a named family.

    Args:
        family: Family tag and parameter

    Returns:
        DensityMatrix of the family

    Raises:
        DomainError: parameter missing or outside the family's closed interval
    """
    x = _check_domain(family)
    tag = family.tag

    if tag == FamilyTag.BELL_PHI_PLUS:
        m = _projector(_cat_ket("00"))
    elif tag == FamilyTag.BELL_PSI_PLUS:
        m = _projector(_cat_ket("01"))
    elif tag == FamilyTag.GHZ:
        m = _projector(_cat_ket("000"))
    elif tag == FamilyTag.MEMS:
        m = mems_matrix(x)
    elif tag == FamilyTag.MNMS2:
        m = mnms2_matrix(x)
    elif tag == FamilyTag.MNMS3:
        return x_state(mnms3_coherences(x))
    elif tag == FamilyTag.DIAG_MIX:
        m = np.diag([x, 0, 0, 1 - x]).astype(complex)
    elif tag == FamilyTag.PLANAR2:
        m = planar2_matrix(x)
    elif tag == FamilyTag.GHZ_BIT_FLIP:
        m = ghz_bit_flip_matrix(x)
    else:
        raise DomainError(f"No constructor for family '{tag}'")
    return DensityMatrix(FAMILY_QUBITS[tag], m)


def correlation_candidate(lam1: float, lam2: float,
                          diagonal: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    The correlation-only matrix (lam1 XX + lam2 YY)/4, optionally with four
    diagonal entries added.

    With no diagonal the matrix is never a state. The diagonal saturating
    positivity, (|lam1-lam2|, lam1+lam2, lam1+lam2, |lam1-lam2|)/4, has trace
    lam1, so it completes a state only when lam1 = 1. Returned as a raw
    matrix for use with validate().
    """
    m = (lam1 * kron(PAULI_X, PAULI_X) + lam2 * kron(PAULI_Y, PAULI_Y)) / 4
    if diagonal is not None:
        m = m + np.diag(np.asarray(diagonal, dtype=complex))
    return m


# =============================================================================
# OPERATIONS ON STATES
# =============================================================================

def mix_white_noise(rho: DensityMatrix, v: float) -> DensityMatrix:
    """v * rho + (1 - v) * I / 2^N."""
    if not (0.0 <= v <= 1.0):
        raise DomainError(f"Visibility {v} outside [0, 1]")
    identity = np.eye(rho.dim, dtype=complex) / rho.dim
    return DensityMatrix(rho.qubits, v * rho.mat + (1 - v) * identity)


def mix(rho: DensityMatrix, other: DensityMatrix, alpha: float) -> DensityMatrix:
    """Convex combination alpha * rho + (1 - alpha) * other."""
    if rho.qubits != other.qubits:
        raise DimensionError("Cannot mix states of different qubit counts")
    if not (0.0 <= alpha <= 1.0):
        raise DomainError(f"Mixing weight {alpha} outside [0, 1]")
    return DensityMatrix(rho.qubits, alpha * rho.mat + (1 - alpha) * other.mat)


def purity(rho: DensityMatrix) -> float:
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho.mat) ** 2))


def linear_entropy(rho: DensityMatrix) -> float:
    """Normalized linear entropy d/(d-1) * (1 - Tr rho^2); rounding residue is clipped to [0, 1]."""
    d = rho.dim
    value = d / (d - 1) * (1 - purity(rho))
    return float(min(1.0, max(0.0, value)))


def mems_linear_entropy(gamma: float) -> float:
    if not (0.0 <= gamma <= 1.0):
        raise DomainError(f"MEMS parameter {gamma} outside [0, 1]")
    if gamma >= 2 / 3:
        return 8 / 3 * gamma * (1 - gamma)
    return 8 / 9 - 2 * gamma ** 2 / 3


def local_unitary(rho: DensityMatrix, unitaries: Sequence[np.ndarray]) -> DensityMatrix:
    """(u_1 x ... x u_N) rho (u_1 x ... x u_N)^dagger."""
    if len(unitaries) != rho.qubits:
        raise DimensionError(f"Need {rho.qubits} single-qubit unitaries, got {len(unitaries)}")
    u = kron_all(unitaries)
    return DensityMatrix(rho.qubits, u @ rho.mat @ dagger(u))


def permute_qubits(rho: DensityMatrix, order: Sequence[int]) -> DensityMatrix:
    """Relabel qubits so that new qubit k is old qubit order[k] (0-indexed)."""
    n = rho.qubits
    if sorted(order) != list(range(n)):
        raise DimensionError(f"{list(order)} is not a permutation of {n} qubits")
    axes = list(order) + [n + k for k in order]
    m = rho.mat.reshape((2,) * (2 * n)).transpose(axes).reshape(rho.dim, rho.dim)
    return DensityMatrix(n, m)
