"""
Command-line entry point for the nonlocality frontier toolkit.

Every command is seeded and writes JSON (or CSV for frontier data) to
stdout or --out. Exit codes: 0 success, 1 domain or I/O error (or a failed
acceptance check), 2 usage error.
"""

import sys
import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from dotenv import load_dotenv

from acceptance import run_all
from errors import DomainError, NonlocalityError
from frontier import (
    CurveTag, FrontierPoint, ScanConfig, curve_grid, dominance_report, emit_csv,
    family_point, scan,
)
from games import GameSpec, enumerate_classical, quantum_win_exact, simulate_rounds, svetlichny_bound
from nonlocality import (
    SettingMode, SettingsTable, chsh_max_horodecki, critical_visibility, expectation,
    maximize, raw_multiplier,
)
from states import DensityMatrix, StateFamily, linear_entropy, make_state, purity
from storage import emit_json, load_json, save_json

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s | %(levelname)s | %(message)s'


# =============================================================================
# SHARED HELPERS
# =============================================================================

def _load_state(args) -> DensityMatrix:
    if getattr(args, "state", None):
        return DensityMatrix.from_json(load_json(args.state))
    if getattr(args, "family", None):
        return make_state(StateFamily.parse(args.family, args.param))
    raise DomainError("Give a state with --family TAG [--param X] or --state FILE.json")


def _multiplier(args, parties: int) -> int:
    return raw_multiplier(parties) if args.convention == "raw" else 1


def _emit(args, document) -> None:
    emit_json(document, args.out, sys.stdout)


def _emit_points(args, points: Sequence[FrontierPoint], parties: int) -> None:
    m = _multiplier(args, parties)
    if m != 1:
        points = [FrontierPoint(p.e_l, p.s * m, p.source, p.tag, p.parameter, p.converged)
                  for p in points]
    emit_csv(points, args.out if args.out else sys.stdout)


def _optimal_settings(args, rho: DensityMatrix) -> SettingsTable:
    if args.settings:
        return SettingsTable.from_json(load_json(args.settings))
    if rho.qubits == 2:
        return chsh_max_horodecki(rho).settings
    return maximize(rho, args.mode, starts=args.starts, seed=args.seed).settings


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_state_make(args) -> int:
    rho = _load_state(args)
    doc = {"family": args.family, "parameter": args.param, **rho.to_json()}
    _emit(args, doc)
    return 0


def cmd_state_entropy(args) -> int:
    rho = _load_state(args)
    _emit(args, {"qubits": rho.qubits, "linear_entropy": linear_entropy(rho), "purity": purity(rho)})
    return 0


def cmd_chsh_max(args) -> int:
    rho = _load_state(args)
    result = chsh_max_horodecki(rho)
    doc = result.to_json(_multiplier(args, rho.qubits))
    doc.update({"convention": args.convention, "win_probability": (2 + result.s_value) / 4})
    _emit(args, doc)
    return 0


def cmd_svet_max(args) -> int:
    rho = _load_state(args)
    result = maximize(rho, args.mode, starts=args.starts, seed=args.seed)
    doc = result.to_json(_multiplier(args, rho.qubits))
    doc.update({
        "convention": args.convention,
        "win_probability": (2 + result.s_value) / 4,
        "seed": args.seed,
    })
    _emit(args, doc)
    return 0


def cmd_visibility(args) -> int:
    rho = _load_state(args)
    v = critical_visibility(rho, args.mode, starts=args.starts, seed=args.seed)
    _emit(args, {"critical_visibility": v, "seed": args.seed})
    return 0


def cmd_game_classical(args) -> int:
    if args.grouping:
        result = enumerate_classical(GameSpec.parse(args.n, args.grouping))
    elif args.n == 2:
        result = enumerate_classical(GameSpec.local(2))
    else:
        result = svetlichny_bound(args.n)
    _emit(args, result.to_json())
    return 0


def _game_spec(args, parties: int) -> GameSpec:
    return GameSpec.parse(parties, args.grouping) if args.grouping else GameSpec.local(parties)


def cmd_game_exact(args) -> int:
    rho = _load_state(args)
    settings = _optimal_settings(args, rho)
    result = quantum_win_exact(rho, settings, _game_spec(args, rho.qubits))
    doc = result.to_json()
    doc["s_value"] = expectation(rho, settings) * _multiplier(args, rho.qubits)
    doc["convention"] = args.convention
    _emit(args, doc)
    return 0


def cmd_game_simulate(args) -> int:
    rho = _load_state(args)
    settings = _optimal_settings(args, rho)
    result = simulate_rounds(rho, settings, _game_spec(args, rho.qubits), args.rounds, seed=args.seed)
    _emit(args, result.to_json())
    return 0


def cmd_frontier_curve(args) -> int:
    tag = CurveTag(args.family)
    parties = 3 if tag == CurveTag.MNMS3 else 2
    _emit_points(args, curve_grid(tag, args.grid), parties)
    return 0


def cmd_frontier_point(args) -> int:
    point = family_point(args.family, args.param, cross_check=args.cross_check,
                         starts=args.starts, seed=args.seed)
    parties = StateFamily.parse(args.family, args.param).qubits
    _emit_points(args, [point], parties)
    return 0


def cmd_frontier_scan(args) -> int:
    if args.config:
        config = ScanConfig.from_json(load_json(args.config))
    else:
        starts = {} if args.starts is None else {"starts": args.starts}
        config = ScanConfig(args.n, args.samples, seed=args.seed, mode=args.mode, **starts)
    points = scan(config)
    report = dominance_report(points, config.qubits)
    logger.info(f"Dominance: {report.to_json()}")
    _emit_points(args, points, config.qubits)
    return 0


def cmd_verify_all(args) -> int:
    results = run_all(seed=args.seed)
    if args.out:
        save_json({"seed": args.seed, "checks": [r.to_json() for r in results]}, args.out)
    return 0 if all(r.passed for r in results) else 1


# =============================================================================
# PARSER
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Seed for every stochastic step")
    common.add_argument("--out", help="Write output here instead of stdout")
    common.add_argument("--convention", choices=["normalized", "raw"], default="normalized",
                        help="raw multiplies S by 2^(N-1)")
    common.add_argument("--verbose", action="store_true", help="Log progress to stderr")

    state_input = argparse.ArgumentParser(add_help=False)
    state_input.add_argument("--family", help="State family tag (e.g. mnms2, mems, ghz)")
    state_input.add_argument("--param", type=float, help="Family parameter")
    state_input.add_argument("--state", help="Density matrix JSON file")

    optimizer = argparse.ArgumentParser(add_help=False)
    optimizer.add_argument("--mode", choices=[m.value for m in SettingMode], default="planar")
    optimizer.add_argument("--starts", type=int, help="Optimizer starts")

    game_input = argparse.ArgumentParser(add_help=False)
    game_input.add_argument("--settings", help="Settings JSON file (default: optimal settings)")
    game_input.add_argument("--grouping", help="Player grouping such as 1|23, or 'local'")

    parser = argparse.ArgumentParser(
        description="Bell/Svetlichny nonlocality versus mixedness toolkit"
    )
    groups = parser.add_subparsers(dest="group", required=True)

    state = groups.add_parser("state").add_subparsers(dest="command", required=True)
    state.add_parser("make", parents=[common, state_input]).set_defaults(func=cmd_state_make)
    state.add_parser("entropy", parents=[common, state_input]).set_defaults(func=cmd_state_entropy)

    nonloc = groups.add_parser("nonloc").add_subparsers(dest="command", required=True)
    nonloc.add_parser("chsh-max", parents=[common, state_input]).set_defaults(func=cmd_chsh_max)
    nonloc.add_parser("svet-max", parents=[common, state_input, optimizer]).set_defaults(func=cmd_svet_max)
    nonloc.add_parser("visibility", parents=[common, state_input, optimizer]).set_defaults(func=cmd_visibility)

    game = groups.add_parser("game").add_subparsers(dest="command", required=True)
    classical = game.add_parser("classical", parents=[common])
    classical.add_argument("--n", type=int, default=2, help="Number of players")
    classical.add_argument("--grouping", help="Player grouping such as 1|23, or 'local'")
    classical.set_defaults(func=cmd_game_classical)
    game.add_parser("exact", parents=[common, state_input, optimizer, game_input]).set_defaults(func=cmd_game_exact)
    simulate = game.add_parser("simulate", parents=[common, state_input, optimizer, game_input])
    simulate.add_argument("--rounds", type=int, default=100_000)
    simulate.set_defaults(func=cmd_game_simulate)

    frontier = groups.add_parser("frontier").add_subparsers(dest="command", required=True)
    curve = frontier.add_parser("curve", parents=[common])
    curve.add_argument("--family", required=True, choices=[t.value for t in CurveTag])
    curve.add_argument("--grid", type=int, default=200)
    curve.set_defaults(func=cmd_frontier_curve)
    point = frontier.add_parser("point", parents=[common, optimizer])
    point.add_argument("--family", required=True)
    point.add_argument("--param", type=float)
    point.add_argument("--no-cross-check", dest="cross_check", action="store_false",
                       help="Skip the optimizer check of three-qubit closed forms")
    point.set_defaults(func=cmd_frontier_point)
    scan_parser = frontier.add_parser("scan", parents=[common, optimizer])
    scan_parser.add_argument("--n", type=int, default=2, help="Qubits per sample")
    scan_parser.add_argument("--samples", type=int, default=1000)
    scan_parser.add_argument("--config", help="ScanConfig JSON file (overrides flags)")
    scan_parser.set_defaults(func=cmd_frontier_scan)

    verify = groups.add_parser("verify").add_subparsers(dest="command", required=True)
    verify.add_parser("all", parents=[common]).set_defaults(func=cmd_verify_all)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run one command.

    Returns:
        Process exit code
    """
    load_dotenv()
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format=LOG_FORMAT,
        datefmt='%H:%M:%S',
        stream=sys.stderr,
    )

    try:
        return args.func(args)
    except (NonlocalityError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
