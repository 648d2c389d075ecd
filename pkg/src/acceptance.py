"""
Acceptance suite behind `verify all`: eleven end-to-end checks of the
state families, game values, classical bounds, frontier curves, random
scans, noise tolerance and Monte Carlo play.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

import numpy as np

from config import ACCEPTANCE
from errors import NonlocalityError
from frontier import (
    CurveTag, ScanConfig, curve_value, dominance_report, mnms3_curve, sample_state, scan,
    win_probability_curve,
)
from games import GameSpec, enumerate_classical, quantum_win_exact, simulate_rounds, svetlichny_bound
from nonlocality import (
    SettingMode, SettingsTable, chsh_max_horodecki, critical_visibility, expectation,
    maximize, mnms3_max_value, mnms3_optimal_settings,
)
from states import FamilyTag, StateFamily, linear_entropy, make_state
from workers import derived_rng

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2)
TSIRELSON_WIN = (2 + SQRT2) / 4

# Optimal CHSH angles for |Phi+>: phi11=0, phi12=pi/2, phi21=7pi/4, phi22=pi/4
BELL_SETTINGS = SettingsTable.planar([(0.0, np.pi / 2), (7 * np.pi / 4, np.pi / 4)])


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_json(self) -> Dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _state(tag: str, parameter: Optional[float] = None):
    return make_state(StateFamily.parse(tag, parameter))


def _random_settings(parties: int, rng: np.random.Generator) -> SettingsTable:
    angles = rng.uniform(0.0, 2 * np.pi, size=(parties, 2, 2))
    return SettingsTable.bloch(angles)


# =============================================================================
# CHECKS
# =============================================================================

def check_tsirelson(sizes: Dict, seed: int) -> CheckResult:
    bell = _state("bell_phi_plus")
    ghz = _state("ghz")
    s_bell = chsh_max_horodecki(bell).s_value
    s_ghz = maximize(ghz, SettingMode.PLANAR, seed=seed).s_value
    p_bell = quantum_win_exact(bell, BELL_SETTINGS, GameSpec.local(2)).win_probability
    p_ghz = quantum_win_exact(ghz, mnms3_optimal_settings(0.0), GameSpec.local(3)).win_probability
    passed = (abs(s_bell - SQRT2) <= 1e-6 and abs(s_ghz - SQRT2) <= 1e-6
              and abs(p_bell - TSIRELSON_WIN) <= 1e-9 and abs(p_ghz - TSIRELSON_WIN) <= 1e-9)
    return CheckResult("tsirelson", passed,
                       f"S(Bell)={s_bell:.12f} S(GHZ)={s_ghz:.12f} "
                       f"Pr(Bell)={p_bell:.12f} Pr(GHZ)={p_ghz:.12f}")


def check_classical_bounds(sizes: Dict, seed: int) -> CheckResult:
    lhv = enumerate_classical(GameSpec.local(2)).win_probability
    per_split = [enumerate_classical(s).win_probability for s in GameSpec.bipartitions(3)]
    hybrid = svetlichny_bound(3).win_probability
    three_quarters = Fraction(3, 4)
    passed = lhv == three_quarters and hybrid == three_quarters and \
        all(p == three_quarters for p in per_split)
    return CheckResult("classical_bounds", passed,
                       f"LHV(N=2)={lhv} hybrid(N=3)={hybrid} per bipartition={[str(p) for p in per_split]}")


def check_horodecki_oracle(sizes: Dict, seed: int) -> CheckResult:
    worst = 0.0
    for i in range(sizes["horodecki_states"]):
        rho = sample_state(2, derived_rng(seed, 3, i))
        exact = chsh_max_horodecki(rho).s_value
        optimized = maximize(rho, SettingMode.BLOCH, starts=sizes["oracle_starts"],
                             seed=seed + i).s_value
        worst = max(worst, abs(optimized - exact))
    return CheckResult("horodecki_oracle", worst <= 1e-6,
                       f"max |optimized - exact| = {worst:.3e} over {sizes['horodecki_states']} states")


def check_mnms2_frontier(sizes: Dict, seed: int) -> CheckResult:
    worst_s = worst_e = worst_curve = 0.0
    for gamma in np.linspace(0.0, 1.0, sizes["grid_points"]):
        rho = _state("mnms2", gamma)
        s = chsh_max_horodecki(rho).s_value
        e_l = linear_entropy(rho)
        worst_s = max(worst_s, abs(s - math.sqrt(1 + gamma ** 2)))
        worst_e = max(worst_e, abs(e_l - (1 - (1 + 2 * gamma ** 2) / 3)))
        worst_curve = max(worst_curve, abs(s - curve_value(CurveTag.MNMS2, min(e_l, 2 / 3))))
    edge = _state("mnms2", 0.0)
    s_edge = chsh_max_horodecki(edge).s_value
    ceases = abs(s_edge - 1) <= 1e-12 and abs(linear_entropy(edge) - 2 / 3) <= 1e-12
    passed = worst_s <= 1e-9 and worst_e <= 1e-12 and worst_curve <= 1e-9 and ceases
    return CheckResult("mnms2_frontier", passed,
                       f"S err {worst_s:.2e}, E_L err {worst_e:.2e}, curve err {worst_curve:.2e}, "
                       f"S=1 at E_L=2/3: {ceases}")


def check_mnms3_closed_forms(sizes: Dict, seed: int) -> CheckResult:
    worst_s = worst_e = worst_curve = 0.0
    for f in (0.0, 1 / 64, 1 / 32, 3 / 64, 1 / 16, 1 / 10, 1 / 8):
        rho = _state("mnms3", f)
        s = expectation(rho, mnms3_optimal_settings(min(f, 1 / 16)))
        e_l = linear_entropy(rho)
        worst_s = max(worst_s, abs(s - mnms3_max_value(f)))
        worst_e = max(worst_e, abs(e_l - 96 * f * (1 - 4 * f) / 7))
        worst_curve = max(worst_curve, abs(s - mnms3_curve(e_l)))
    passed = worst_s <= 1e-9 and worst_e <= 1e-12 and worst_curve <= 1e-9
    return CheckResult("mnms3_closed_forms", passed,
                       f"S err {worst_s:.2e}, E_L err {worst_e:.2e}, curve err {worst_curve:.2e}")


def check_xor_identity(sizes: Dict, seed: int) -> CheckResult:
    worst = 0.0
    for n in (2, 3):
        for i in range(sizes["identity_pairs"]):
            rng = derived_rng(seed, 6, n, i)
            rho = sample_state(n, rng)
            settings = _random_settings(n, rng)
            exact = quantum_win_exact(rho, settings, GameSpec.local(n)).win_probability
            worst = max(worst, abs(exact - (2 + expectation(rho, settings)) / 4))
    return CheckResult("xor_identity", worst <= 1e-12, f"max deviation {worst:.2e}")


def check_win_probability_curves(sizes: Dict, seed: int) -> CheckResult:
    worst = 0.0
    ordered = True
    for gamma in np.linspace(0.0, 1.0, sizes["grid_points"]):
        values = {}
        for tag in (FamilyTag.MNMS2, FamilyTag.MEMS):
            rho = _state(tag.value, gamma)
            settings = chsh_max_horodecki(rho).settings
            values[tag] = quantum_win_exact(rho, settings, GameSpec.local(2)).win_probability
            worst = max(worst, abs(values[tag] - win_probability_curve(tag, gamma)))
        gap = values[FamilyTag.MNMS2] - values[FamilyTag.MEMS]
        if gamma < 1.0:
            ordered &= gap > 1e-12
        else:
            ordered &= abs(gap) <= 1e-9
    return CheckResult("win_probability_curves", worst <= 1e-9 and ordered,
                       f"max deviation {worst:.2e}, MNMS above MEMS below gamma=1: {ordered}")


def check_envelope_dominance(sizes: Dict, seed: int) -> CheckResult:
    two = dominance_report(scan(ScanConfig(2, sizes["scan_samples_2q"], seed=seed)), 2)
    three = dominance_report(scan(ScanConfig(3, sizes["scan_samples_3q"], seed=seed)), 3)
    return CheckResult("envelope_dominance", two.passed and three.passed,
                       f"N=2: {two.above_envelope} above, {two.below_min} below MIN2; "
                       f"N=3: {three.above_envelope} above, {three.skipped} unconverged skipped")


def check_white_noise(sizes: Dict, seed: int) -> CheckResult:
    worst = 0.0
    named = [("bell_phi_plus", None), ("ghz", None), ("mnms2", 0.8), ("mnms3", 1 / 32)]
    for tag, parameter in named:
        rho = _state(tag, parameter)
        if rho.qubits == 2:
            s = chsh_max_horodecki(rho).s_value
        else:
            s = mnms3_max_value(0.0 if parameter is None else parameter)
        v = critical_visibility(rho, seed=seed)
        worst = max(worst, abs(v * s - 1))

    shortfall = 0.0
    nonlocal_count = 0
    for i in range(sizes["visibility_states"]):
        rho = sample_state(2, derived_rng(seed, 9, i), rank=sizes["visibility_rank"])
        if chsh_max_horodecki(rho).s_value <= 1.0:
            continue
        nonlocal_count += 1
        e_l = linear_entropy(rho)
        gamma = math.sqrt(max(0.0, 1 - 1.5 * e_l))
        reference = critical_visibility(_state("mnms2", gamma))
        shortfall = max(shortfall, reference - critical_visibility(rho))
    passed = worst <= 1e-8 and shortfall <= 1e-9
    return CheckResult("white_noise", passed,
                       f"max |v*S - 1| = {worst:.2e}; {nonlocal_count} nonlocal samples, "
                       f"worst shortfall vs MNMS2 {shortfall:.2e}")


def check_bit_flip_channel(sizes: Dict, seed: int) -> CheckResult:
    worst = 0.0
    for f in np.linspace(0.0, 1 / 8, sizes["bit_flip_points"]):
        flipped = _state("ghz_bit_flip", f).mat
        mnms = _state("mnms3", f).mat
        worst = max(worst, float(np.max(np.abs(flipped - mnms))))
    return CheckResult("bit_flip_channel", worst <= 1e-15, f"max entry difference {worst:.2e}")


def check_monte_carlo(sizes: Dict, seed: int) -> CheckResult:
    bell = _state("bell_phi_plus")
    spec = GameSpec.local(2)
    first = simulate_rounds(bell, BELL_SETTINGS, spec, sizes["mc_rounds"], seed=seed)
    second = simulate_rounds(bell, BELL_SETTINGS, spec, sizes["mc_rounds"], seed=seed)
    sigma = math.sqrt(TSIRELSON_WIN * (1 - TSIRELSON_WIN) / sizes["mc_rounds"])
    z = abs(first.win_probability - TSIRELSON_WIN) / sigma
    passed = z <= 5 and first.wins == second.wins
    return CheckResult("monte_carlo", passed,
                       f"rate {first.win_probability:.6f} ({z:.2f} sigma), "
                       f"repeat wins {first.wins} == {second.wins}")


CHECKS: List[Callable[[Dict, int], CheckResult]] = [
    check_tsirelson,
    check_classical_bounds,
    check_horodecki_oracle,
    check_mnms2_frontier,
    check_mnms3_closed_forms,
    check_xor_identity,
    check_win_probability_curves,
    check_envelope_dominance,
    check_white_noise,
    check_bit_flip_channel,
    check_monte_carlo,
]


def run_all(seed: int = 0, sizes: Optional[Dict] = None, echo: bool = True) -> List[CheckResult]:
    """
    Run every acceptance check in order.

    Args:
        seed: Seed shared by all stochastic checks
        sizes: Overrides for ACCEPTANCE sample sizes
        echo: Print the numbered step report to stdout

    Returns:
        One CheckResult per check; a check that raises counts as failed
    """
    sizes = {**ACCEPTANCE, **(sizes or {})}
    if echo:
        print("=" * 60)
        print(f"🔬 ACCEPTANCE SUITE (seed {seed})")
        print("=" * 60)

    results = []
    for k, check in enumerate(CHECKS, start=1):
        title = check.__name__.replace("check_", "").replace("_", " ")
        if echo:
            print(f"\n[{k}/{len(CHECKS)}] {title}...")
        try:
            result = check(sizes, seed)
        except NonlocalityError as e:
            logger.error(f"Check '{title}' raised: {e}")
            result = CheckResult(check.__name__.replace("check_", ""), False, f"error: {e}")
        results.append(result)
        if echo:
            mark = "✅" if result.passed else "❌"
            print(f"       {mark} {result.detail}")

    if echo:
        passed = sum(r.passed for r in results)
        print("\n" + "=" * 60)
        print(f"{passed}/{len(results)} checks passed")
        print("=" * 60)
    return results
