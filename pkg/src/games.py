"""
The N-party Svetlichny XOR game: win predicate, exact quantum winning
probability, Monte Carlo play and exhaustive enumeration of deterministic
hybrid strategies.

Players answer one bit each; they win when the XOR of the answers equals
floor(T/2) mod 2, T being the number of question bits equal to 1.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import ENUMERATION, SIMULATION
from errors import ArityError, DimensionError, DomainError, SizeError
from matcore import kron_all
from nonlocality import SettingsTable, question_parity
from states import DensityMatrix
from workers import derived_rng, run_indexed

logger = logging.getLogger(__name__)


class GameMode(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"
    ENUMERATED = "enumerated"


# =============================================================================
# GAME DESCRIPTION
# =============================================================================

@dataclass(frozen=True)
class GameSpec:
    """
    Party count plus a grouping of the players (labels 1..N).

    Players inside a group may answer as an arbitrary joint function of the
    group's questions; nothing is shared across groups.
    """

    parties: int
    groups: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if not (2 <= self.parties <= ENUMERATION["max_parties"]):
            raise DimensionError(
                f"Games are defined for 2..{ENUMERATION['max_parties']} players, got {self.parties}"
            )
        groups = tuple(tuple(sorted(int(p) for p in g)) for g in self.groups)
        if len(groups) < 2:
            raise DomainError("A grouping needs at least two groups")
        if any(len(g) == 0 for g in groups):
            raise DomainError("Groups must be non-empty")
        members = [p for g in groups for p in g]
        if sorted(members) != list(range(1, self.parties + 1)):
            raise DomainError(
                f"Groups {groups} must be disjoint and cover players 1..{self.parties}"
            )
        object.__setattr__(self, "groups", groups)

    @classmethod
    def local(cls, parties: int) -> "GameSpec":
        """Every player alone: the local hidden-variable setting."""
        return cls(parties, tuple((p,) for p in range(1, parties + 1)))

    @classmethod
    def bipartitions(cls, parties: int) -> List["GameSpec"]:
        """All unordered splits of the players into two non-empty groups."""
        players = range(1, parties + 1)
        specs = []
        for size in range(1, parties // 2 + 1):
            for first in combinations(players, size):
                if 2 * size == parties and 1 not in first:
                    continue
                rest = tuple(p for p in players if p not in first)
                specs.append(cls(parties, (first, rest)))
        return specs

    @classmethod
    def parse(cls, parties: int, text: str) -> "GameSpec":
        """'1|23' style groupings; 'local' puts every player alone."""
        if text == "local":
            return cls.local(parties)
        try:
            groups = tuple(tuple(int(ch) for ch in part) for part in text.split("|"))
        except ValueError:
            raise DomainError(f"Cannot parse grouping '{text}'")
        return cls(parties, groups)

    @property
    def label(self) -> str:
        return "|".join("".join(str(p) for p in g) for g in self.groups)

    def strategy_count(self) -> int:
        count = 1
        for g in self.groups:
            inputs = 2 ** len(g)
            count *= inputs ** inputs
        return count


@dataclass(frozen=True)
class StrategyHybrid:
    """
    Deterministic response tables, one per group.

    tables[g][i] is the group's answer bits (as an integer, first member
    most significant) for local question index i.
    """

    groups: Tuple[Tuple[int, ...], ...]
    tables: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        for g, table in zip(self.groups, self.tables):
            if len(table) != 2 ** len(g):
                raise DomainError(f"Response table of group {g} is incomplete")

    def respond(self, questions: Sequence[int]) -> List[int]:
        answers = [0] * len(questions)
        for g, table in zip(self.groups, self.tables):
            local = _bits_to_int(questions[p - 1] for p in g)
            reply = _int_to_bits(table[local], len(g))
            for p, bit in zip(g, reply):
                answers[p - 1] = bit
        return answers

    def to_json(self) -> Dict:
        tables = []
        for g, table in zip(self.groups, self.tables):
            width = len(g)
            tables.append({
                format(i, f"0{width}b"): format(a, f"0{width}b")
                for i, a in enumerate(table)
            })
        return {"groups": [list(g) for g in self.groups], "tables": tables}


@dataclass(frozen=True)
class GameResult:
    win_probability: Union[Fraction, float]
    mode: GameMode
    grouping: Optional[str] = None
    strategy: Optional[StrategyHybrid] = None
    settings: Optional[SettingsTable] = None
    stderr: Optional[float] = None
    wins: Optional[int] = None
    rounds: Optional[int] = None
    seed: Optional[int] = None
    bipartitions: Optional[int] = None

    def to_json(self) -> Dict:
        doc = {"mode": self.mode.value, "win_probability": float(self.win_probability)}
        if isinstance(self.win_probability, Fraction):
            doc["fraction"] = str(self.win_probability)
        optional = {
            "grouping": self.grouping,
            "stderr": self.stderr,
            "wins": self.wins,
            "rounds": self.rounds,
            "seed": self.seed,
            "bipartitions": self.bipartitions,
        }
        doc.update({k: v for k, v in optional.items() if v is not None})
        if self.strategy is not None:
            doc["strategy"] = self.strategy.to_json()
        if self.settings is not None:
            doc["settings"] = self.settings.to_json()
        return doc


def _bits_to_int(bits) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _int_to_bits(value: int, width: int) -> List[int]:
    return [(value >> (width - 1 - k)) & 1 for k in range(width)]


# =============================================================================
# WIN CONDITION
# =============================================================================

def win_predicate(questions: Sequence[int], answers: Sequence[int]) -> bool:
    """
    True iff a_1 xor ... xor a_N == floor(T/2) mod 2.

    Raises:
        ArityError: questions and answers differ in length
    """
    if len(questions) != len(answers):
        raise ArityError(f"{len(questions)} questions but {len(answers)} answers")
    if any(int(b) not in (0, 1) for b in list(questions) + list(answers)):
        raise DomainError("Questions and answers must be bits")
    return sum(int(a) for a in answers) % 2 == question_parity(questions)


def _win_table(parties: int) -> np.ndarray:
    """win[J, A] over integer-coded questions and answers."""
    size = 2 ** parties
    table = np.zeros((size, size), dtype=bool)
    for j in range(size):
        questions = _int_to_bits(j, parties)
        for a in range(size):
            table[j, a] = win_predicate(questions, _int_to_bits(a, parties))
    return table


def strategy_win_probability(spec: GameSpec, strategy: StrategyHybrid) -> Fraction:
    """Exact winning probability of one deterministic strategy over uniform questions."""
    wins = 0
    for j in range(2 ** spec.parties):
        questions = _int_to_bits(j, spec.parties)
        wins += win_predicate(questions, strategy.respond(questions))
    return Fraction(wins, 2 ** spec.parties)


# =============================================================================
# CLASSICAL AND HYBRID ENUMERATION
# =============================================================================

def _group_parities(spec: GameSpec, group: Tuple[int, ...]) -> np.ndarray:
    """
    Answer parity of every response table of one group, indexed by global
    question: shape (strategies, 2^N).
    """
    width = len(group)
    base = 2 ** width
    strategies = np.arange(base ** base, dtype=np.int64)
    places = base ** np.arange(base, dtype=np.int64)
    answers = (strategies[:, None] // places[None, :]) % base   # (strategies, inputs)
    parity_of = np.array([bin(a).count("1") % 2 for a in range(base)], dtype=np.int8)
    parities = parity_of[answers]
    return parities[:, _local_index(spec, group)]


def _decode_tables(group: Tuple[int, ...], index: int) -> Tuple[int, ...]:
    base = 2 ** len(group)
    return tuple((index // base ** i) % base for i in range(base))


def _local_index(spec: GameSpec, group: Tuple[int, ...]) -> np.ndarray:
    """Local question index of the group for every global question."""
    return np.array([
        _bits_to_int(_int_to_bits(j, spec.parties)[p - 1] for p in group)
        for j in range(2 ** spec.parties)
    ])


def enumerate_classical(spec: GameSpec, max_strategies: Optional[int] = None) -> GameResult:
    """
    Exact maximum winning probability over every deterministic hybrid
    strategy for the grouping.

    The response tables of all groups but the largest are enumerated. The
    largest group then plays its best response: only the parity of its
    answer matters, so for each of its local questions it picks the parity
    that wins on more of the other groups' questions.

    Args:
        spec: Party count and grouping
        max_strategies: Budget on enumerated table combinations
            (ENUMERATION['max_strategies'] when None)

    Returns:
        GameResult with a Fraction win probability and the best strategy

    Raises:
        SizeError: the enumerated groups have more table combinations than the budget
    """
    if max_strategies is None:
        max_strategies = ENUMERATION["max_strategies"]
    responder = max(range(len(spec.groups)), key=lambda k: (len(spec.groups[k]), -k))
    others = [g for k, g in enumerate(spec.groups) if k != responder]
    searched = 1
    for g in others:
        inputs = 2 ** len(g)
        searched *= inputs ** inputs
    if searched > max_strategies:
        raise SizeError(
            f"Grouping {spec.label} needs {searched} table combinations, budget is {max_strategies}"
        )

    n_questions = 2 ** spec.parties
    target = np.array([question_parity(_int_to_bits(j, spec.parties))
                       for j in range(n_questions)], dtype=np.int8)

    total = np.zeros((1,) * len(others) + (n_questions,), dtype=np.int8)
    for k, group in enumerate(others):
        parities = _group_parities(spec, group)
        shape = [1] * len(others) + [n_questions]
        shape[k] = parities.shape[0]
        total = total ^ parities.reshape(shape)
    # mismatch[..., J] = 1 where the responder must answer with odd parity
    mismatch = (total != target).astype(np.int32)

    local = _local_index(spec, spec.groups[responder])
    onehot = np.zeros((n_questions, 2 ** len(spec.groups[responder])), dtype=np.int32)
    onehot[np.arange(n_questions), local] = 1
    odd = mismatch @ onehot
    even = onehot.sum(axis=0) - odd
    wins = np.maximum(odd, even).sum(axis=-1)

    # first maximum in C order: lowest table indices win ties
    best = np.unravel_index(int(np.argmax(wins)), wins.shape)
    tables = [_decode_tables(g, int(i)) for g, i in zip(others, best)]
    # answer 1 has odd parity; even-parity ties answer 0
    response = tuple(int(o > e) for o, e in zip(odd[best], even[best]))
    tables.insert(responder, response)
    strategy = StrategyHybrid(spec.groups, tuple(tables))
    probability = Fraction(int(wins[best]), n_questions)
    logger.info(f"Grouping {spec.label}: {searched} table combinations searched, best {probability}")
    return GameResult(probability, GameMode.ENUMERATED, grouping=spec.label, strategy=strategy)


def svetlichny_bound(parties: int, max_strategies: Optional[int] = None) -> GameResult:
    """Hybrid bound: maximum of enumerate_classical over every bipartition."""
    specs = GameSpec.bipartitions(parties)
    results = [enumerate_classical(s, max_strategies) for s in specs]
    best = max(results, key=lambda r: r.win_probability)
    return GameResult(best.win_probability, GameMode.ENUMERATED, grouping=best.grouping,
                      strategy=best.strategy, bipartitions=len(specs))


# =============================================================================
# QUANTUM PLAY
# =============================================================================

def _check_match(rho: DensityMatrix, settings: SettingsTable, spec: GameSpec):
    if not (rho.qubits == settings.parties == spec.parties):
        raise DimensionError(
            f"State ({rho.qubits} qubits), settings ({settings.parties}) and game "
            f"({spec.parties} players) disagree"
        )


def answer_distributions(rho: DensityMatrix, settings: SettingsTable) -> np.ndarray:
    """
    P[J, A]: Born-rule probability of answers A given questions J, both
    integer-coded with player 1 as the most significant bit.
    """
    n = settings.parties
    bases = [[s.eigenbasis() for s in pair] for pair in settings.settings]
    size = 2 ** n
    dist = np.empty((size, size))
    for j in range(size):
        bits = _int_to_bits(j, n)
        v = kron_all(bases[k][b] for k, b in enumerate(bits))
        dist[j] = np.real(np.einsum("ia,ij,ja->a", np.conj(v), rho.mat, v))
    return dist


def quantum_win_exact(rho: DensityMatrix, settings: SettingsTable, spec: GameSpec) -> GameResult:
    """
    Pr(win) = (1/2^N) sum_J sum_A win(J, A) P(A|J).

    Equals (2 + S)/4 with S the normalized game value of the settings.
    """
    _check_match(rho, settings, spec)
    dist = answer_distributions(rho, settings)
    wins = _win_table(spec.parties)
    probability = float(np.sum(dist * wins) / dist.shape[0])
    return GameResult(probability, GameMode.EXACT, grouping=spec.label, settings=settings)


def _play_block(cdf: np.ndarray, wins: np.ndarray, seed: int, block: int, size: int) -> int:
    questions = derived_rng(seed, block, 0).integers(0, cdf.shape[0], size=size)
    u = derived_rng(seed, block, 1).random(size)
    answers = np.minimum((u[:, None] >= cdf[questions]).sum(axis=1), cdf.shape[1] - 1)
    return int(wins[questions, answers].sum())


def simulate_rounds(rho: DensityMatrix, settings: SettingsTable, spec: GameSpec,
                    rounds: int, seed: int = 0, block_size: Optional[int] = None,
                    max_workers: Optional[int] = None) -> GameResult:
    """
    Play the game rounds times with uniformly random questions and answers
    drawn from the Born rule.

    Rounds are split into fixed-size blocks; block b draws questions from
    stream (seed, b, 0) and answers from stream (seed, b, 1), so the win
    count depends only on the seed.

    Returns:
        GameResult with the empirical win rate, its binomial standard error
        and the raw win count

    Raises:
        DomainError: rounds < 1
    """
    if rounds < 1:
        raise DomainError(f"rounds must be positive, got {rounds}")
    _check_match(rho, settings, spec)
    block_size = SIMULATION["block_size"] if block_size is None else block_size

    dist = np.clip(answer_distributions(rho, settings), 0.0, None)
    dist = dist / dist.sum(axis=1, keepdims=True)
    cdf = np.cumsum(dist, axis=1)
    wins_table = _win_table(spec.parties)

    blocks = [(b, min(block_size, rounds - b * block_size))
              for b in range((rounds + block_size - 1) // block_size)]
    counts = run_indexed(lambda item: _play_block(cdf, wins_table, seed, item[0], item[1]),
                         blocks, max_workers)
    wins = int(sum(counts))
    rate = wins / rounds
    stderr = float(np.sqrt(rate * (1 - rate) / rounds))
    return GameResult(rate, GameMode.MONTE_CARLO, grouping=spec.label, settings=settings,
                      stderr=stderr, wins=wins, rounds=rounds, seed=seed)
