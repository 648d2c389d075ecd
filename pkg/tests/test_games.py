"""
tests/test_games.py
Unit tests for the Svetlichny XOR game: win predicate, classical and
hybrid enumeration, exact quantum winning probability and Monte Carlo play.

Run with:
    pytest tests/test_games.py -v
"""
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from errors import ArityError, DimensionError, DomainError, SizeError
from frontier import sample_state
from games import (
    GameMode, GameSpec, StrategyHybrid, enumerate_classical, quantum_win_exact,
    simulate_rounds, strategy_win_probability, svetlichny_bound, win_predicate,
)
from nonlocality import (
    SettingsTable, chsh_max_horodecki, expectation, mnms3_optimal_settings,
)
from states import DensityMatrix, StateFamily, make_state, permute_qubits
from workers import derived_rng

TSIRELSON_WIN = (2 + math.sqrt(2)) / 4
BELL_ANGLES = SettingsTable.planar([(0.0, np.pi / 2), (7 * np.pi / 4, np.pi / 4)])


def family(tag, parameter=None) -> DensityMatrix:
    return make_state(StateFamily.parse(tag, parameter))


def random_settings(parties: int, seed: int) -> SettingsTable:
    return SettingsTable.bloch(derived_rng(seed).uniform(0, 2 * np.pi, size=(parties, 2, 2)))


class TestWinPredicate:

    def test_all_zero(self) -> None:
        assert win_predicate((0, 0), (0, 0))

    def test_both_ones_need_odd_parity(self) -> None:
        assert not win_predicate((1, 1), (0, 0))
        assert win_predicate((1, 1), (1, 0))

    def test_three_players(self) -> None:
        assert win_predicate((1, 1, 1), (1, 0, 0))
        assert not win_predicate((1, 1, 0), (0, 0, 0))

    def test_arity(self) -> None:
        with pytest.raises(ArityError, match="2 questions but 3 answers"):
            win_predicate((0, 1), (0, 0, 1))

    def test_bits_only(self) -> None:
        with pytest.raises(DomainError, match="bits"):
            win_predicate((0, 2), (0, 0))


class TestGameSpec:

    def test_bipartition_counts(self) -> None:
        assert [len(GameSpec.bipartitions(n)) for n in (2, 3, 4)] == [1, 3, 7]

    def test_parse(self) -> None:
        spec = GameSpec.parse(3, "2|13")
        assert spec.groups == ((2,), (1, 3))
        assert spec.label == "2|13"

    def test_overlapping_groups(self) -> None:
        with pytest.raises(DomainError, match="disjoint"):
            GameSpec(3, ((1, 2), (2, 3)))

    def test_single_group(self) -> None:
        with pytest.raises(DomainError, match="two groups"):
            GameSpec(2, ((1, 2),))

    def test_too_many_players(self) -> None:
        with pytest.raises(DimensionError):
            GameSpec.local(5)


class TestClassicalEnumeration:
    """Deterministic strategies: every bipartition is capped at 3/4."""

    def test_chsh_local_bound(self) -> None:
        result = enumerate_classical(GameSpec.local(2))
        assert result.win_probability == Fraction(3, 4)
        assert result.mode == GameMode.ENUMERATED

    @pytest.mark.parametrize("spec", GameSpec.bipartitions(3), ids=lambda s: s.label)
    def test_each_bipartition(self, spec) -> None:
        assert enumerate_classical(spec).win_probability == Fraction(3, 4)

    def test_svetlichny_bound(self) -> None:
        result = svetlichny_bound(3)
        assert result.win_probability == Fraction(3, 4)
        assert result.bipartitions == 3
        doc = result.to_json()
        assert doc["win_probability"] == 0.75
        assert doc["fraction"] == "3/4"

    def test_three_player_local_bound(self) -> None:
        assert enumerate_classical(GameSpec.local(3)).win_probability == Fraction(3, 4)

    def test_all_zero_answers(self) -> None:
        spec = GameSpec.local(2)
        strategy = StrategyHybrid(spec.groups, ((0, 0), (0, 0)))
        assert strategy_win_probability(spec, strategy) == Fraction(3, 4)

    def test_reported_strategy_attains_value(self) -> None:
        spec = GameSpec.parse(3, "1|23")
        result = enumerate_classical(spec)
        assert strategy_win_probability(spec, result.strategy) == result.win_probability

    @pytest.mark.parametrize("grouping", ["1|234", "3|124", "12|34", "1|2|34"])
    def test_four_players(self, grouping) -> None:
        spec = GameSpec.parse(4, grouping)
        result = enumerate_classical(spec)
        assert result.win_probability == Fraction(3, 4)
        assert strategy_win_probability(spec, result.strategy) == result.win_probability

    def test_four_player_local_bound(self) -> None:
        assert enumerate_classical(GameSpec.local(4)).win_probability == Fraction(5, 8)

    def test_four_player_svetlichny_bound(self) -> None:
        result = svetlichny_bound(4)
        assert result.bipartitions == 7
        assert result.win_probability == Fraction(3, 4)

    @pytest.mark.parametrize("grouping", ["1|23", "2|13", "1|2|3"])
    def test_best_response_matches_brute_force(self, grouping) -> None:
        spec = GameSpec.parse(3, grouping)
        choices = [product(range(2 ** len(g)), repeat=2 ** len(g)) for g in spec.groups]
        brute = max(
            strategy_win_probability(spec, StrategyHybrid(spec.groups, tables))
            for tables in product(*[list(c) for c in choices])
        )
        assert enumerate_classical(spec).win_probability == brute

    def test_budget(self) -> None:
        with pytest.raises(SizeError, match="budget"):
            enumerate_classical(GameSpec.parse(3, "1|23"), max_strategies=3)

    def test_incomplete_table(self) -> None:
        with pytest.raises(DomainError, match="incomplete"):
            StrategyHybrid(((1,), (2, 3)), ((0, 1), (0, 1, 2)))


class TestQuantumExact:

    def test_bell(self) -> None:
        result = quantum_win_exact(family("bell_phi_plus"), BELL_ANGLES, GameSpec.local(2))
        assert result.win_probability == pytest.approx(TSIRELSON_WIN, abs=1e-12)

    def test_ghz(self) -> None:
        result = quantum_win_exact(family("ghz"), mnms3_optimal_settings(0.0), GameSpec.local(3))
        assert result.win_probability == pytest.approx(TSIRELSON_WIN, abs=1e-12)

    @pytest.mark.parametrize("gamma", [0.0, 0.3, 0.8, 1.0])
    def test_mnms2(self, gamma) -> None:
        rho = family("mnms2", gamma)
        result = quantum_win_exact(rho, chsh_max_horodecki(rho).settings, GameSpec.local(2))
        assert result.win_probability == pytest.approx((2 + math.sqrt(1 + gamma ** 2)) / 4, abs=1e-12)

    @pytest.mark.parametrize("parties,seed", [(2, 0), (2, 1), (3, 2), (3, 3)])
    def test_xor_identity(self, parties, seed) -> None:
        rho = sample_state(parties, derived_rng(seed, 40))
        settings = random_settings(parties, seed)
        exact = quantum_win_exact(rho, settings, GameSpec.local(parties)).win_probability
        assert exact == pytest.approx((2 + expectation(rho, settings)) / 4, abs=1e-12)

    def test_player_permutation(self) -> None:
        rho = sample_state(3, derived_rng(17))
        settings = random_settings(3, 18)
        order = [2, 0, 1]
        moved = SettingsTable(settings.mode, tuple(settings.settings[k] for k in order))
        before = quantum_win_exact(rho, settings, GameSpec.parse(3, "1|23")).win_probability
        after = quantum_win_exact(permute_qubits(rho, order), moved,
                                  GameSpec.parse(3, "3|12")).win_probability
        assert after == pytest.approx(before, abs=1e-12)

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(DimensionError):
            quantum_win_exact(family("ghz"), BELL_ANGLES, GameSpec.local(2))


class TestSimulation:

    def test_bell_within_five_sigma(self) -> None:
        rounds = 100_000
        result = simulate_rounds(family("bell_phi_plus"), BELL_ANGLES, GameSpec.local(2), rounds, seed=1)
        sigma = math.sqrt(TSIRELSON_WIN * (1 - TSIRELSON_WIN) / rounds)
        assert abs(result.win_probability - TSIRELSON_WIN) <= 5 * sigma
        assert result.stderr == pytest.approx(sigma, rel=0.05)

    def test_seed_reproducible(self) -> None:
        args = (family("ghz"), mnms3_optimal_settings(0.0), GameSpec.local(3), 5000)
        assert simulate_rounds(*args, seed=9).wins == simulate_rounds(*args, seed=9).wins

    def test_thread_count_irrelevant(self) -> None:
        args = (family("bell_phi_plus"), BELL_ANGLES, GameSpec.local(2), 10_000)
        serial = simulate_rounds(*args, seed=4, block_size=1000, max_workers=1)
        threaded = simulate_rounds(*args, seed=4, block_size=1000, max_workers=4)
        assert serial.wins == threaded.wins

    def test_single_round(self) -> None:
        result = simulate_rounds(family("bell_phi_plus"), BELL_ANGLES, GameSpec.local(2), 1, seed=0)
        assert result.win_probability in (0.0, 1.0)

    def test_zero_rounds(self) -> None:
        with pytest.raises(DomainError, match="rounds"):
            simulate_rounds(family("bell_phi_plus"), BELL_ANGLES, GameSpec.local(2), 0)

    def test_json_fields(self) -> None:
        doc = simulate_rounds(family("bell_phi_plus"), BELL_ANGLES, GameSpec.local(2), 100, seed=2).to_json()
        assert doc["mode"] == "monte_carlo"
        assert doc["rounds"] == 100
        assert doc["seed"] == 2
        assert "stderr" in doc
