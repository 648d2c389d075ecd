"""
Bell (CHSH) and Svetlichny operators for planar or Bloch measurement
settings, their expectations, the exact two-qubit maximum, a multi-start
Nelder-Mead maximizer and the white-noise critical visibility.

Values use the normalized convention: classical (hybrid) bound 1, quantum
maximum sqrt(2). Multiply by 2^(N-1) for the raw convention.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from config import OPTIMIZER, TOLERANCES, VISIBILITY
from errors import ContractError, DimensionError, DomainError, UndefinedError
from matcore import PAULI_I, PAULIS, herm_eigvals, kron, kron_all, trace_product
from states import DensityMatrix, mix_white_noise
from workers import derived_rng, run_indexed

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
SUPPORTED_PARTIES = (2, 3)


class SettingMode(str, Enum):
    PLANAR = "planar"
    BLOCH = "bloch"


class Method(str, Enum):
    HORODECKI_EXACT = "horodecki_exact"
    OPTIMIZED = "optimized"
    CLOSED_FORM = "closed_form"


# =============================================================================
# MEASUREMENT SETTINGS
# =============================================================================

@dataclass(frozen=True)
class MeasurementSetting:
    """
    One projective +-1 measurement along a Bloch direction.

    Planar settings measure cos(phi) sigma_x + sin(phi) sigma_y; theta is
    fixed at pi/2 for them.
    """

    mode: SettingMode
    phi: float
    theta: float = np.pi / 2

    def __post_init__(self):
        object.__setattr__(self, "mode", SettingMode(self.mode))
        if self.mode == SettingMode.PLANAR:
            object.__setattr__(self, "theta", np.pi / 2)

    @property
    def direction(self) -> np.ndarray:
        if self.mode == SettingMode.PLANAR:
            return np.array([np.cos(self.phi), np.sin(self.phi), 0.0])
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @property
    def observable(self) -> np.ndarray:
        return np.einsum("a,aij->ij", self.direction, PAULIS)

    def eigenbasis(self) -> np.ndarray:
        """Columns: eigenvector for outcome +1 (answer 0), then for -1 (answer 1)."""
        half = self.theta / 2
        phase = np.exp(1j * self.phi)
        return np.array([
            [np.cos(half), np.sin(half)],
            [phase * np.sin(half), -phase * np.cos(half)],
        ], dtype=complex)

    def to_json(self):
        if self.mode == SettingMode.PLANAR:
            return float(self.phi)
        return [float(self.theta), float(self.phi)]


@dataclass(frozen=True)
class SettingsTable:
    """Two measurement settings per party; index 0 answers question bit 0."""

    mode: SettingMode
    settings: Tuple[Tuple[MeasurementSetting, MeasurementSetting], ...]

    def __post_init__(self):
        object.__setattr__(self, "mode", SettingMode(self.mode))
        for k, pair in enumerate(self.settings):
            if len(pair) != 2:
                raise DimensionError(f"Party {k + 1} has {len(pair)} settings, expected 2")

    @property
    def parties(self) -> int:
        return len(self.settings)

    def directions(self) -> np.ndarray:
        """Array of shape (parties, 2, 3)."""
        return np.array([[s.direction for s in pair] for pair in self.settings])

    @classmethod
    def planar(cls, phis: Sequence[Sequence[float]]) -> "SettingsTable":
        return cls(SettingMode.PLANAR, tuple(
            (MeasurementSetting(SettingMode.PLANAR, p0), MeasurementSetting(SettingMode.PLANAR, p1))
            for p0, p1 in phis
        ))

    @classmethod
    def bloch(cls, angles: Sequence[Sequence[Sequence[float]]]) -> "SettingsTable":
        """angles[k][i] = (theta, phi)."""
        return cls(SettingMode.BLOCH, tuple(
            tuple(MeasurementSetting(SettingMode.BLOCH, phi, theta) for theta, phi in pair)
            for pair in angles
        ))

    @classmethod
    def from_vector(cls, mode: SettingMode, parties: int, x: np.ndarray) -> "SettingsTable":
        mode = SettingMode(mode)
        if mode == SettingMode.PLANAR:
            return cls.planar(np.asarray(x).reshape(parties, 2))
        return cls.bloch(np.asarray(x).reshape(parties, 2, 2))

    def to_vector(self) -> np.ndarray:
        if self.mode == SettingMode.PLANAR:
            return np.array([[s.phi for s in pair] for pair in self.settings]).reshape(-1)
        return np.array([[[s.theta, s.phi] for s in pair] for pair in self.settings]).reshape(-1)

    def to_json(self) -> Dict:
        return {
            "parties": self.parties,
            "mode": self.mode.value,
            "angles": [[s.to_json() for s in pair] for pair in self.settings],
        }

    @classmethod
    def from_json(cls, doc: Dict) -> "SettingsTable":
        mode = SettingMode(doc["mode"])
        angles = doc["angles"]
        if len(angles) != int(doc.get("parties", len(angles))):
            raise DimensionError("Settings document lists a different number of parties")
        if mode == SettingMode.PLANAR:
            return cls.planar(angles)
        return cls.bloch(angles)


@dataclass(frozen=True)
class BlochDecomposition2Q:
    r: np.ndarray
    s: np.ndarray
    T: np.ndarray
    lambda_sq: np.ndarray   # eigenvalues of T^T T, descending

    def reconstruct(self) -> np.ndarray:
        m = kron(PAULI_I, PAULI_I).astype(complex)
        for i in range(3):
            m = m + self.r[i] * kron(PAULIS[i], PAULI_I) + self.s[i] * kron(PAULI_I, PAULIS[i])
            for j in range(3):
                m = m + self.T[i, j] * kron(PAULIS[i], PAULIS[j])
        return m / 4


@dataclass(frozen=True)
class NonlocalityResult:
    s_value: float
    settings: SettingsTable
    method: Method
    converged: bool = True
    starts: int = 0

    def to_json(self, multiplier: float = 1.0) -> Dict:
        return {
            "s_value": self.s_value * multiplier,
            "method": self.method.value,
            "converged": self.converged,
            "settings": self.settings.to_json(),
        }


def raw_multiplier(parties: int) -> int:
    """Factor from the normalized to the raw Bell-expression convention."""
    return 2 ** (parties - 1)


# =============================================================================
# OPERATORS AND EXPECTATIONS
# =============================================================================

def question_parity(bits: Sequence[int]) -> int:
    """floor(T/2) mod 2 where T counts question bits equal to 1."""
    return (sum(int(b) for b in bits) // 2) % 2


def svetlichny_signs(parties: int) -> np.ndarray:
    """Sign tensor (-1)^floor(T/2) of shape (2,) * parties."""
    signs = np.empty((2,) * parties)
    for bits in np.ndindex(*signs.shape):
        signs[bits] = -1.0 if question_parity(bits) else 1.0
    return signs


def _check_parties(parties: int):
    if parties not in SUPPORTED_PARTIES:
        raise DimensionError(f"Game operators exist for N in {SUPPORTED_PARTIES}, got N={parties}")


def game_operator(settings: SettingsTable) -> np.ndarray:
    """
    (1/2^(N-1)) * sum_J (-1)^floor(T/2) A_{1,i1} x ... x A_{N,iN}.

    For N=2 this is the CHSH operator, for N=3 the Svetlichny operator.
    """
    n = settings.parties
    _check_parties(n)
    observables = [[s.observable for s in pair] for pair in settings.settings]
    signs = svetlichny_signs(n)
    op = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for bits in np.ndindex(*signs.shape):
        op += signs[bits] * kron_all(observables[k][b] for k, b in enumerate(bits))
    return op / raw_multiplier(n)


def expectation(rho: DensityMatrix, settings: SettingsTable) -> float:
    """Tr(rho * game_operator(settings))."""
    if rho.qubits != settings.parties:
        raise DimensionError(
            f"State has {rho.qubits} qubits but settings cover {settings.parties} parties"
        )
    value = trace_product(rho.mat, game_operator(settings))
    if abs(value.imag) > TOLERANCES["imaginary"]:
        raise ContractError(f"Expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def correlation_tensor(rho: DensityMatrix) -> np.ndarray:
    """t[a1..aN] = Tr(rho sigma_a1 x ... x sigma_aN), real, shape (3,) * N."""
    n = rho.qubits
    reshaped = rho.mat.reshape((2,) * (2 * n))
    rows, cols = list(range(n)), list(range(n, 2 * n))
    out = list(range(2 * n, 3 * n))
    operands = [reshaped, rows + cols]
    for k in range(n):
        operands += [PAULIS, [out[k], cols[k], rows[k]]]
    tensor = np.einsum(*operands, out)
    return np.real(tensor)


def _directions(x: np.ndarray, mode: SettingMode, parties: int) -> np.ndarray:
    """Measurement directions of shape (parties, 2, c): c=2 (x, y) planar, c=3 Bloch."""
    if mode == SettingMode.PLANAR:
        phi = x.reshape(parties, 2)
        out = np.empty((parties, 2, 2))
        out[..., 0] = np.cos(phi)
        out[..., 1] = np.sin(phi)
        return out
    angles = x.reshape(parties, 2, 2)
    theta, phi = angles[..., 0], angles[..., 1]
    st = np.sin(theta)
    out = np.empty((parties, 2, 3))
    out[..., 0] = st * np.cos(phi)
    out[..., 1] = st * np.sin(phi)
    out[..., 2] = np.cos(theta)
    return out


def _last_party_vectors(tensor: np.ndarray, directions: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """
    Signed correlation vectors v_j seen by the last party, shape (2, c).

    The game value with the last party measuring along unit vectors e_j is
    sum_j v_j . e_j / 2^(N-1), so |v_0| + |v_1| is its maximum over that party.
    """
    c = tensor.shape[0]
    w = directions[0] @ tensor.reshape(c, -1)
    for k in range(1, directions.shape[0]):
        w = np.matmul(directions[k], w.reshape(w.shape[0], c, -1))
        w = w.reshape(-1, w.shape[-1])
    return signs.reshape(-1, 2).T @ w.reshape(-1, c)


# =============================================================================
# TWO-QUBIT EXACT MAXIMUM
# =============================================================================

def bloch_decompose(rho: DensityMatrix) -> BlochDecomposition2Q:
    """Local vectors r, s and correlation matrix T of a two-qubit state."""
    if rho.qubits != 2:
        raise DimensionError(f"Bloch decomposition needs two qubits, got {rho.qubits}")
    r = np.array([trace_product(rho.mat, kron(PAULIS[i], PAULI_I)) for i in range(3)])
    s = np.array([trace_product(rho.mat, kron(PAULI_I, PAULIS[j])) for j in range(3)])
    t = np.array([[trace_product(rho.mat, kron(PAULIS[m], PAULIS[n])) for n in range(3)]
                  for m in range(3)])
    residue = max(np.max(np.abs(r.imag)), np.max(np.abs(s.imag)), np.max(np.abs(t.imag)))
    if residue > TOLERANCES["bloch"]:
        raise ContractError(f"Pauli coefficients have imaginary residue {residue:.3e}")
    t = t.real
    lambda_sq = herm_eigvals((t.T @ t).astype(complex))
    return BlochDecomposition2Q(r.real, s.real, t, lambda_sq)


def _wrap(angles):
    """Reduce to [0, 2pi); a tiny negative angle would otherwise round up to 2pi."""
    out = np.mod(angles, TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def _angles_of(vector: np.ndarray) -> Tuple[float, float]:
    v = vector / np.linalg.norm(vector)
    theta = float(np.arctan2(np.hypot(v[0], v[1]), v[2]))
    phi = float(_wrap(np.arctan2(v[1], v[0])))
    return theta, phi


def horodecki_settings(decomposition: BlochDecomposition2Q) -> SettingsTable:
    """
    Bloch settings attaining sqrt(lambda_1^2 + lambda_2^2).

    Bob measures along cos(eta) c1 +- sin(eta) c2 with c1, c2 the leading
    eigenvectors of T^T T and tan(eta) = lambda_2/lambda_1; Alice measures
    along T c1 and T c2.
    """
    t = decomposition.T
    evals, evecs = np.linalg.eigh(t.T @ t)
    c1, c2 = evecs[:, 2], evecs[:, 1]
    l1, l2 = np.sqrt(max(evals[2], 0.0)), np.sqrt(max(evals[1], 0.0))
    eps = 1e-12

    if l1 <= eps:
        z = (0.0, 0.0)
        return SettingsTable.bloch([[z, z], [z, z]])

    eta = np.arctan2(l2, l1)
    b1 = np.cos(eta) * c1 + np.sin(eta) * c2
    b2 = np.cos(eta) * c1 - np.sin(eta) * c2
    a1 = t @ c1
    a2 = t @ c2 if l2 > eps else c2
    return SettingsTable.bloch([
        [_angles_of(a1), _angles_of(a2)],
        [_angles_of(b1), _angles_of(b2)],
    ])


def chsh_max_horodecki(rho: DensityMatrix) -> NonlocalityResult:
    """Exact CHSH maximum sqrt(lambda_1^2 + lambda_2^2) of a two-qubit state."""
    decomposition = bloch_decompose(rho)
    lam = np.clip(decomposition.lambda_sq, 0.0, None)
    value = float(np.sqrt(lam[0] + lam[1]))
    return NonlocalityResult(value, horodecki_settings(decomposition), Method.HORODECKI_EXACT)


# =============================================================================
# NUMERICAL MAXIMIZATION
# =============================================================================

@dataclass(frozen=True)
class _Run:
    value: float
    x: np.ndarray
    success: bool


def _nelder_mead(objective, x0: np.ndarray, max_iter: int) -> _Run:
    res = minimize(
        objective, x0, method="Nelder-Mead",
        options={
            "maxiter": max_iter,
            "xatol": OPTIMIZER["xatol"],
            "fatol": OPTIMIZER["fatol"],
            "adaptive": True,
        },
    )
    return _Run(-float(res.fun), _wrap(res.x), bool(res.success))


def _best_response(vectors: np.ndarray, mode: SettingMode) -> np.ndarray:
    """Angles of the last party's two settings, each along its correlation vector."""
    out = []
    for v in vectors:
        if np.linalg.norm(v) <= 1e-15:
            out.extend([0.0] if mode == SettingMode.PLANAR else [0.0, 0.0])
        elif mode == SettingMode.PLANAR:
            out.append(float(_wrap(np.arctan2(v[1], v[0]))))
        else:
            out.extend(_angles_of(v))
    return np.array(out)


def _best_run(runs: Sequence[_Run]) -> _Run:
    # highest value; ties go to the lexicographically smallest angles
    return min(runs, key=lambda run: (-run.value, tuple(run.x)))


def maximize(rho: DensityMatrix, mode: SettingMode = SettingMode.PLANAR,
             starts: Optional[int] = None, seed: Optional[int] = None,
             max_iter: Optional[int] = None,
             initial: Optional[Sequence[SettingsTable]] = None,
             polish: bool = True,
             max_workers: Optional[int] = None) -> NonlocalityResult:
    """
    Maximize the game value over all measurement angles.

    Planar mode optimizes 2(N-1) azimuths, Bloch mode 4(N-1) polar/azimuth
    angles. The value is linear in the last party's directions, so that
    party always plays its best response: each setting points along its
    signed correlation vector.
    Every start is an independent Nelder-Mead run; the best is re-started
    once to confirm convergence.

    Args:
        rho: Two- or three-qubit state
        mode: Planar or Bloch settings
        starts: Random starts (OPTIMIZER['starts'] when None)
        seed: Seed of the start points (OPTIMIZER['seed'] when None)
        max_iter: Iteration budget per start
        initial: Settings used as extra warm starts, run before the random ones
        polish: Re-start from the best point
        max_workers: Thread cap for the starts

    Returns:
        NonlocalityResult with method OPTIMIZED; converged is False when the
        polish run still moved the value by more than OPTIMIZER['converged_gap']
    """
    n = rho.qubits
    _check_parties(n)
    mode = SettingMode(mode)
    starts = OPTIMIZER["starts"] if starts is None else starts
    seed = OPTIMIZER["seed"] if seed is None else seed
    max_iter = OPTIMIZER["max_iter"] if max_iter is None else max_iter

    tensor = correlation_tensor(rho)
    if mode == SettingMode.PLANAR:
        tensor = tensor[(slice(0, 2),) * n]
    signs = svetlichny_signs(n)
    scale = raw_multiplier(n)
    width = (2 if mode == SettingMode.PLANAR else 4) * (n - 1)

    def last_vectors(x: np.ndarray) -> np.ndarray:
        return _last_party_vectors(tensor, _directions(x, mode, n - 1), signs)

    def objective(x: np.ndarray) -> float:
        return -float(np.linalg.norm(last_vectors(x), axis=1).sum()) / scale

    points: List[np.ndarray] = []
    for table in initial or []:
        if table.mode != mode or table.parties != n:
            raise DimensionError("Warm-start settings do not match the mode and party count")
        points.append(table.to_vector()[:width])
    if starts > 0:
        points.extend(derived_rng(seed, 0).uniform(0.0, TWO_PI, size=(starts, width)))
    if not points:
        raise DomainError("maximize needs at least one start")

    runs = run_indexed(lambda x0: _nelder_mead(objective, x0, max_iter), points, max_workers)
    best = _best_run(runs)
    converged = best.success
    if polish:
        again = _nelder_mead(objective, best.x, max_iter)
        converged = again.success or abs(again.value - best.value) <= OPTIMIZER["converged_gap"]
        best = _best_run([best, again])
    if not converged:
        logger.warning(f"Optimizer did not converge within {max_iter} iterations "
                       f"(best value {best.value:.12f})")

    last = _best_response(last_vectors(best.x), mode)
    settings = SettingsTable.from_vector(mode, n, np.concatenate([best.x, last]))
    return NonlocalityResult(best.value, settings, Method.OPTIMIZED, converged, starts)


# =============================================================================
# THREE-QUBIT MNMS CLOSED FORMS
# =============================================================================

def mnms3_optimal_settings(f: float) -> SettingsTable:
    """
    Planar settings phi11 = phi21 = -theta, phi12 = phi22 = phi31 = theta,
    phi32 = pi - theta with theta = arccos sqrt((1-8f)/(2-24f)).
    """
    if not (0.0 <= f <= 1 / 16):
        raise DomainError(f"Closed-form settings need f in [0, 1/16], got {f}")
    theta = float(np.arccos(np.sqrt((1 - 8 * f) / (2 - 24 * f))))
    return SettingsTable.planar([
        (-theta, theta),
        (-theta, theta),
        (theta, np.pi - theta),
    ])


def mnms3_max_value(f: float) -> float:
    """Svetlichny maximum of the three-qubit MNMS: rises to sqrt(2) at f=0, equals 1 on [1/16, 1/8]."""
    if not (0.0 <= f <= 1 / 8):
        raise DomainError(f"MNMS3 parameter {f} outside [0, 1/8]")
    if f >= 1 / 16:
        return 1.0
    return (1 - 8 * f) ** 1.5 / (0.5 - 6 * f) ** 0.5


# =============================================================================
# WHITE-NOISE TOLERANCE
# =============================================================================

def critical_visibility(rho: DensityMatrix, mode: SettingMode = SettingMode.PLANAR,
                        starts: Optional[int] = None, seed: Optional[int] = None,
                        iterations: Optional[int] = None) -> float:
    """
    Smallest visibility v at which v*rho + (1-v)*I/d stops violating the
    classical bound, by bisection on [0, 1].

    Two-qubit states use the exact maximum at every step; three-qubit states
    run the optimizer once and then warm-start it from the previous argmax.

    Raises:
        UndefinedError: the state does not violate the bound at v = 1
    """
    n = rho.qubits
    _check_parties(n)
    iterations = VISIBILITY["iterations"] if iterations is None else iterations

    if n == 2:
        base_value = chsh_max_horodecki(rho).s_value

        def value_at(v: float) -> float:
            return chsh_max_horodecki(mix_white_noise(rho, v)).s_value
    else:
        base = maximize(rho, mode, starts=starts, seed=seed)
        base_value = base.s_value
        warm = [base.settings]

        def value_at(v: float) -> float:
            result = maximize(mix_white_noise(rho, v), mode, starts=0,
                              initial=warm, polish=False)
            warm[0] = result.settings
            return result.s_value

    if base_value <= 1.0:
        raise UndefinedError(f"State is local (game value {base_value:.12f} <= 1)")

    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if value_at(mid) > 1.0:
            hi = mid
        else:
            lo = mid
    logger.info(f"Critical visibility {hi:.15f} for game value {base_value:.12f}")
    return hi
