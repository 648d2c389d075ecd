"""
The entropy-nonlocality plane: analytic frontier curves, points of the
named state families, Hilbert-Schmidt random scans, envelope dominance
checks and CSV output of (E_L, S) points.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import OPTIMIZER, OUTPUT, SCAN
from errors import DimensionError, DomainError
from nonlocality import (
    SettingMode, SettingsTable, chsh_max_horodecki, expectation, maximize,
    mnms3_optimal_settings,
)
from states import (
    DensityMatrix, FamilyTag, StateFamily, linear_entropy, make_state,
)
from workers import derived_rng, run_indexed

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2)


class CurveTag(str, Enum):
    MNMS2 = "mnms2"
    MEMS2 = "mems2"
    MIN2 = "min2"
    PLANAR2 = "planar2"
    MNMS3 = "mnms3"


# (low, high, low is open)
CURVE_DOMAINS = {
    CurveTag.MNMS2: (0.0, 2 / 3, False),
    CurveTag.MEMS2: (0.0, 8 / 9, False),
    CurveTag.MIN2: (0.0, 2 / 3, False),
    CurveTag.PLANAR2: (2 / 3, 1.0, True),
    CurveTag.MNMS3: (0.0, 6 / 7, False),
}

# Curve each family traces on the plane
FAMILY_CURVES = {
    FamilyTag.BELL_PHI_PLUS: CurveTag.MNMS2,
    FamilyTag.BELL_PSI_PLUS: CurveTag.MNMS2,
    FamilyTag.MNMS2: CurveTag.MNMS2,
    FamilyTag.MEMS: CurveTag.MEMS2,
    FamilyTag.DIAG_MIX: CurveTag.MIN2,
    FamilyTag.PLANAR2: CurveTag.PLANAR2,
    FamilyTag.GHZ: CurveTag.MNMS3,
    FamilyTag.MNMS3: CurveTag.MNMS3,
    FamilyTag.GHZ_BIT_FLIP: CurveTag.MNMS3,
}


class PointSource(str, Enum):
    SAMPLED = "sampled"
    FAMILY = "family"
    CURVE = "curve"


@dataclass(frozen=True)
class FrontierPoint:
    e_l: float
    s: float
    source: PointSource
    tag: Optional[str] = None
    parameter: Optional[float] = None
    converged: bool = True

    @property
    def source_label(self) -> str:
        label = self.source.value
        if self.tag is not None:
            label = f"{label}:{self.tag}"
        if not self.converged:
            label = f"{label}:unconverged"
        return label

    @classmethod
    def from_label(cls, e_l: float, s: float, label: str,
                   parameter: Optional[float]) -> "FrontierPoint":
        parts = label.split(":")
        converged = parts[-1] != "unconverged"
        if not converged:
            parts = parts[:-1]
        tag = parts[1] if len(parts) > 1 else None
        return cls(e_l, s, PointSource(parts[0]), tag, parameter, converged)


# =============================================================================
# ANALYTIC CURVES
# =============================================================================

def _check_curve_domain(tag: CurveTag, e_l: float):
    lo, hi, open_low = CURVE_DOMAINS[tag]
    below = e_l <= lo if open_low else e_l < lo
    if below or e_l > hi or math.isnan(e_l):
        bracket = "(" if open_low else "["
        raise DomainError(f"E_L={e_l} outside {bracket}{lo}, {hi}] for curve '{tag.value}'")


def mnms3_curve(e_l: float) -> float:
    """Svetlichny maximum of the three-qubit MNMS as a function of its linear entropy."""
    if e_l >= 9 / 14:
        return 1.0
    w = 6 - math.sqrt(6) * math.sqrt(6 - 7 * e_l)
    return (1 - w / 6) ** 1.5 / (0.5 - w / 8) ** 0.5


def curve_value(tag, e_l: float) -> float:
    """
    Value of an analytic frontier curve at linear entropy e_l.

    Args:
        tag: CurveTag or its string value
        e_l: Linear entropy inside the curve's domain

    Returns:
        Normalized game value S on the curve

    Raises:
        DomainError: e_l outside the curve's domain
    """
    tag = CurveTag(tag)
    e_l = float(e_l)
    _check_curve_domain(tag, e_l)

    if tag == CurveTag.MNMS2:
        return math.sqrt(2 - 1.5 * e_l)
    if tag == CurveTag.MIN2:
        return math.sqrt(max(0.0, 1 - 1.5 * e_l))
    if tag == CurveTag.PLANAR2:
        return math.sqrt(max(0.0, 3 - 3 * e_l))
    if tag == CurveTag.MEMS2:
        if e_l <= 16 / 27:
            return (SQRT2 + math.sqrt(2 - 3 * e_l)) / 2
        return math.sqrt(25 - 27 * e_l - min(1.0, 1.5 * (8 - 9 * e_l))) / 3
    return mnms3_curve(e_l)


def curve_grid(tag, grid: int) -> List[FrontierPoint]:
    """grid evenly spaced curve points across the domain (open ends excluded)."""
    tag = CurveTag(tag)
    if grid < 1:
        raise DomainError(f"grid must be positive, got {grid}")
    lo, hi, open_low = CURVE_DOMAINS[tag]
    xs = np.linspace(lo, hi, grid + 1)[1:] if open_low else np.linspace(lo, hi, grid)
    return [FrontierPoint(float(x), curve_value(tag, x), PointSource.CURVE, tag.value)
            for x in xs]


def envelope_value(qubits: int, e_l: float) -> float:
    """Upper envelope of S at fixed E_L: MNMS2 then PLANAR2, or the MNMS3 curve then 1."""
    if qubits == 2:
        return curve_value(CurveTag.MNMS2 if e_l <= 2 / 3 else CurveTag.PLANAR2, e_l)
    if qubits == 3:
        return mnms3_curve(e_l) if e_l < 9 / 14 else 1.0
    raise DimensionError(f"No envelope for {qubits} qubits")


def win_probability_curve(tag, gamma: float) -> float:
    """
    Optimal CHSH winning probability of the two-qubit MNMS or MEMS at parameter gamma.
    """
    tag = FamilyTag(tag)
    if not (0.0 <= gamma <= 1.0):
        raise DomainError(f"gamma={gamma} outside [0, 1]")
    if tag == FamilyTag.MNMS2:
        return (2 + math.sqrt(1 + gamma ** 2)) / 4
    if tag == FamilyTag.MEMS:
        if gamma <= 2 / 3:
            return (6 + math.sqrt(1 + 18 * gamma ** 2 - min(1.0, 9 * gamma ** 2))) / 12
        return (2 + SQRT2 * gamma) / 4
    raise DomainError(f"No winning-probability curve for family '{tag.value}'")


# =============================================================================
# FAMILY POINTS
# =============================================================================

def family_value(family: StateFamily, rho: DensityMatrix) -> float:
    """Game value of a family member: Horodecki for two qubits, closed-form settings for three."""
    if rho.qubits == 2:
        return chsh_max_horodecki(rho).s_value
    f = 0.0 if family.tag == FamilyTag.GHZ else float(family.parameter)
    return expectation(rho, mnms3_optimal_settings(min(f, 1 / 16)))


def family_point(tag, parameter: Optional[float] = None, cross_check: bool = True,
                 starts: Optional[int] = None, seed: Optional[int] = None) -> FrontierPoint:
    """
    (E_L, S) of a named family member.

    Args:
        tag: Family tag
        parameter: Family parameter (None for parameter-free families)
        cross_check: Also run the planar optimizer and log a warning if it
            disagrees by more than 1e-6 (three qubits only; on by default)

    Returns:
        FrontierPoint with source FAMILY
    """
    family = StateFamily.parse(tag, parameter)
    rho = make_state(family)
    e_l = linear_entropy(rho)
    s = family_value(family, rho)

    if cross_check and rho.qubits == 3:
        optimized = maximize(rho, SettingMode.PLANAR, starts=starts, seed=seed)
        if abs(optimized.s_value - s) > 1e-6:
            logger.warning(f"Optimizer gives {optimized.s_value:.12f} but closed form "
                           f"gives {s:.12f} for {family.tag.value}({parameter})")

    return FrontierPoint(e_l, s, PointSource.FAMILY, family.tag.value,
                         None if parameter is None else float(parameter))


# =============================================================================
# RANDOM SCANS
# =============================================================================

def sample_state(qubits: int, rng: np.random.Generator,
                 rank: Optional[int] = None) -> DensityMatrix:
    """
    Hilbert-Schmidt random state G G^dagger / Tr(G G^dagger) with G a
    d x rank complex Gaussian matrix (rank = d when None).
    """
    if qubits not in (2, 3):
        raise DimensionError(f"Sampling supports 2 or 3 qubits, got {qubits}")
    d = 2 ** qubits
    k = d if rank is None else int(rank)
    if not (1 <= k <= d):
        raise DomainError(f"Ginibre rank {k} outside [1, {d}]")
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ np.conj(g).T
    m = (m + np.conj(m).T) / 2
    return DensityMatrix(qubits, m / np.trace(m).real)


@dataclass(frozen=True)
class ScanConfig:
    qubits: int
    samples: int
    seed: int = 0
    mode: SettingMode = SettingMode.PLANAR
    starts: int = SCAN["starts"]
    rank: Optional[int] = SCAN["rank"]
    audit_fraction: float = SCAN["audit_fraction"]

    def __post_init__(self):
        object.__setattr__(self, "mode", SettingMode(self.mode))
        if self.qubits not in (2, 3):
            raise DimensionError(f"Scans support 2 or 3 qubits, got {self.qubits}")
        if self.samples < 1:
            raise DomainError(f"samples must be positive, got {self.samples}")
        if not (0.0 <= self.audit_fraction <= 1.0):
            raise DomainError(f"audit_fraction {self.audit_fraction} outside [0, 1]")

    def to_json(self) -> Dict:
        return {
            "qubits": self.qubits,
            "samples": self.samples,
            "seed": self.seed,
            "mode": self.mode.value,
            "starts": self.starts,
            "rank": self.rank,
            "audit_fraction": self.audit_fraction,
        }

    @classmethod
    def from_json(cls, doc: Dict) -> "ScanConfig":
        return cls(**doc)


def _sample(config: ScanConfig, index: int) -> Tuple[DensityMatrix, int]:
    rng = derived_rng(config.seed, index)
    rho = sample_state(config.qubits, rng, config.rank)
    optimizer_seed = int(rng.integers(0, 2 ** 63))
    return rho, optimizer_seed


def _scan_one(config: ScanConfig, index: int) -> Tuple[FrontierPoint, Optional[SettingsTable]]:
    rho, optimizer_seed = _sample(config, index)
    e_l = linear_entropy(rho)
    if config.qubits == 2:
        s = chsh_max_horodecki(rho).s_value
        return FrontierPoint(e_l, s, PointSource.SAMPLED, parameter=float(index)), None
    result = maximize(rho, config.mode, starts=config.starts, seed=optimizer_seed, max_workers=1)
    point = FrontierPoint(e_l, result.s_value, PointSource.SAMPLED, config.mode.value,
                          float(index), result.converged)
    return point, result.settings


def _as_bloch(settings: SettingsTable) -> SettingsTable:
    return SettingsTable.bloch([[(np.pi / 2, s.phi) for s in pair] for pair in settings.settings])


def _audit(config: ScanConfig, points: List[FrontierPoint],
           settings: List[Optional[SettingsTable]], max_workers: Optional[int]) -> List[FrontierPoint]:
    """
    Re-run the planar points closest to the envelope in Bloch mode, keep the
    larger value and tag them 'bloch'.
    """
    count = int(math.ceil(config.audit_fraction * len(points)))
    if count == 0:
        return points
    slack = [envelope_value(3, p.e_l) - p.s for p in points]
    top = sorted(range(len(points)), key=lambda i: (slack[i], i))[:count]

    def rerun(index: int) -> FrontierPoint:
        rho, optimizer_seed = _sample(config, index)
        result = maximize(rho, SettingMode.BLOCH, starts=config.starts, seed=optimizer_seed,
                          initial=[_as_bloch(settings[index])], max_workers=1)
        old = points[index]
        if result.s_value > old.s + OPTIMIZER["converged_gap"]:
            logger.warning(f"Bloch audit raised sample {index} from {old.s:.12f} "
                           f"to {result.s_value:.12f}")
            return FrontierPoint(old.e_l, result.s_value, old.source, SettingMode.BLOCH.value,
                                 old.parameter, result.converged)
        return FrontierPoint(old.e_l, old.s, old.source, SettingMode.BLOCH.value,
                             old.parameter, old.converged)

    audited = run_indexed(rerun, top, max_workers)
    points = list(points)
    for index, point in zip(top, audited):
        points[index] = point
    return points


def scan(config: ScanConfig, max_workers: Optional[int] = None) -> List[FrontierPoint]:
    """
    (E_L, S_max) of config.samples random states, in sample order.

    Sample i draws from the stream (seed, i), so results do not depend on
    the thread count. Three-qubit planar scans re-check their top
    audit_fraction of points in Bloch mode.
    """
    logger.info(f"Scanning {config.samples} {config.qubits}-qubit states (seed {config.seed})")
    results = run_indexed(lambda i: _scan_one(config, i), list(range(config.samples)), max_workers)
    points = [p for p, _ in results]
    if config.qubits == 3 and config.mode == SettingMode.PLANAR:
        points = _audit(config, points, [s for _, s in results], max_workers)
    flagged = sum(not p.converged for p in points)
    if flagged:
        logger.warning(f"{flagged} of {len(points)} samples did not converge")
    return points


# =============================================================================
# DOMINANCE
# =============================================================================

@dataclass
class DominanceReport:
    qubits: int
    total: int = 0
    skipped: int = 0
    above_envelope: int = 0
    below_min: int = 0
    max_excess: float = float("-inf")
    offenders: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.above_envelope == 0 and self.below_min == 0

    def to_json(self) -> Dict:
        return {
            "qubits": self.qubits,
            "total": self.total,
            "skipped": self.skipped,
            "above_envelope": self.above_envelope,
            "below_min": self.below_min,
            "max_excess": None if self.total == self.skipped else self.max_excess,
            "passed": self.passed,
        }


def dominance_report(points: Sequence[FrontierPoint], qubits: int,
                     tolerance: Optional[float] = None) -> DominanceReport:
    """
    Count points above the upper envelope and, for two qubits, below the
    MIN2 curve on E_L <= 2/3. Unconverged points are skipped and counted.
    """
    if tolerance is None:
        tolerance = 1e-9 if qubits == 2 else 1e-6
    report = DominanceReport(qubits)
    for i, point in enumerate(points):
        report.total += 1
        if not point.converged:
            report.skipped += 1
            continue
        excess = point.s - envelope_value(qubits, point.e_l)
        report.max_excess = max(report.max_excess, excess)
        bad = excess > tolerance
        if bad:
            report.above_envelope += 1
        if qubits == 2 and point.e_l <= 2 / 3:
            if point.s < curve_value(CurveTag.MIN2, point.e_l) - tolerance:
                report.below_min += 1
                bad = True
        if bad:
            report.offenders.append(i)
    return report


# =============================================================================
# CSV
# =============================================================================

def points_frame(points: Sequence[FrontierPoint]) -> pd.DataFrame:
    rows = [{
        "e_l": p.e_l,
        "s": p.s,
        "source": p.source_label,
        "parameter": np.nan if p.parameter is None else p.parameter,
    } for p in points]
    return pd.DataFrame(rows, columns=OUTPUT["csv_columns"])


def emit_csv(points: Sequence[FrontierPoint], path) -> None:
    """
    Write points as CSV with header e_l,s,source,parameter and 17
    significant digits, rows in input order.

    Raises:
        OSError: path not writable (message carries the path)
    """
    digits = OUTPUT["significant_digits"]
    try:
        points_frame(points).to_csv(path, index=False, float_format=f"%.{digits}g",
                                    na_rep="", lineterminator="\n")
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror or e}") from e
    logger.info(f"Wrote {len(points)} points to {path}")


def read_csv(path) -> List[FrontierPoint]:
    """Parse a file written by emit_csv back into points, bit-exactly."""
    try:
        df = pd.read_csv(path, float_precision="round_trip", dtype={"source": str})
    except OSError as e:
        raise OSError(f"Cannot read {path}: {e.strerror or e}") from e
    points = []
    for row in df.itertuples(index=False):
        parameter = None if pd.isna(row.parameter) else float(row.parameter)
        points.append(FrontierPoint.from_label(float(row.e_l), float(row.s), row.source, parameter))
    return points
