"""
tests/test_cli.py
End-to-end tests of the command-line front end: JSON/CSV artifacts,
conventions, determinism and exit codes.

Run with:
    pytest tests/test_cli.py -v
"""
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import json
import math

import pytest

import main as cli
from acceptance import CheckResult


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestNonlocCommands:

    def test_chsh_max_mnms2(self, capsys) -> None:
        code, out, _ = run(capsys, "nonloc", "chsh-max", "--family", "mnms2", "--param", "0.8")
        assert code == 0
        doc = json.loads(out)
        assert doc["s_value"] == pytest.approx(1.2806248474865698, abs=1e-12)
        assert doc["method"] == "horodecki_exact"

    def test_raw_convention(self, capsys) -> None:
        _, normalized, _ = run(capsys, "nonloc", "chsh-max", "--family", "bell_phi_plus")
        _, raw, _ = run(capsys, "nonloc", "chsh-max", "--family", "bell_phi_plus", "--convention", "raw")
        normalized, raw = json.loads(normalized), json.loads(raw)
        assert raw["s_value"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert raw["win_probability"] == normalized["win_probability"]

    def test_svet_max_ghz(self, capsys) -> None:
        code, out, _ = run(capsys, "nonloc", "svet-max", "--family", "ghz", "--starts", "8")
        doc = json.loads(out)
        assert code == 0
        assert doc["s_value"] == pytest.approx(math.sqrt(2), abs=1e-6)
        assert doc["win_probability"] == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-6)
        assert doc["seed"] == 0
        assert doc["settings"]["parties"] == 3

    def test_visibility(self, capsys) -> None:
        _, out, _ = run(capsys, "nonloc", "visibility", "--family", "bell_phi_plus")
        assert json.loads(out)["critical_visibility"] == pytest.approx(1 / math.sqrt(2), abs=1e-8)

    def test_state_file_input(self, capsys, tmp_path) -> None:
        path = tmp_path / "mems.json"
        assert run(capsys, "state", "make", "--family", "mems", "--param", "0.9", "--out", str(path))[0] == 0
        _, from_file, _ = run(capsys, "nonloc", "chsh-max", "--state", str(path))
        _, from_family, _ = run(capsys, "nonloc", "chsh-max", "--family", "mems", "--param", "0.9")
        assert json.loads(from_file)["s_value"] == json.loads(from_family)["s_value"]

    def test_entropy(self, capsys) -> None:
        _, out, _ = run(capsys, "state", "entropy", "--family", "mnms3", "--param", "0.0625")
        assert json.loads(out)["linear_entropy"] == pytest.approx(9 / 14, abs=1e-12)


class TestGameCommands:

    def test_classical_three_players(self, capsys) -> None:
        _, out, _ = run(capsys, "game", "classical", "--n", "3")
        doc = json.loads(out)
        assert doc["win_probability"] == 0.75
        assert doc["bipartitions"] == 3

    def test_classical_four_players(self, capsys) -> None:
        code, out, _ = run(capsys, "game", "classical", "--n", "4")
        doc = json.loads(out)
        assert code == 0
        assert doc["fraction"] == "3/4"
        assert doc["bipartitions"] == 7

    def test_classical_grouping(self, capsys) -> None:
        _, out, _ = run(capsys, "game", "classical", "--n", "3", "--grouping", "2|13")
        assert json.loads(out)["grouping"] == "2|13"

    def test_exact_bell(self, capsys) -> None:
        _, out, _ = run(capsys, "game", "exact", "--family", "bell_phi_plus")
        doc = json.loads(out)
        assert doc["win_probability"] == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-12)
        assert doc["s_value"] == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_simulate_byte_identical(self, capsys) -> None:
        argv = ("game", "simulate", "--family", "bell_phi_plus", "--rounds", "2000", "--seed", "7")
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second
        assert json.loads(first)["seed"] == 7


class TestFrontierCommands:

    def test_curve_csv(self, capsys, tmp_path) -> None:
        path = tmp_path / "curve.csv"
        code, _, _ = run(capsys, "frontier", "curve", "--family", "mnms3", "--grid", "200", "--out", str(path))
        lines = path.read_text().splitlines()
        assert code == 0
        assert lines[0] == "e_l,s,source,parameter"
        assert len(lines) == 201
        assert float(lines[-1].split(",")[0]) == pytest.approx(6 / 7)

    def test_curve_raw_convention(self, capsys) -> None:
        _, out, _ = run(capsys, "frontier", "curve", "--family", "mnms3", "--grid", "2", "--convention", "raw")
        first = out.splitlines()[1].split(",")
        assert float(first[1]) == pytest.approx(4 * math.sqrt(2))

    def test_scan_to_stdout(self, capsys) -> None:
        _, out, _ = run(capsys, "frontier", "scan", "--n", "2", "--samples", "5", "--seed", "1")
        assert len(out.splitlines()) == 6

    def test_point(self, capsys) -> None:
        _, out, _ = run(capsys, "frontier", "point", "--family", "mnms2", "--param", "1")
        row = out.splitlines()[1].split(",")
        assert float(row[1]) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_point_without_cross_check(self, capsys) -> None:
        _, out, _ = run(capsys, "frontier", "point", "--family", "mnms3", "--param", "0.03125",
                        "--no-cross-check")
        row = out.splitlines()[1].split(",")
        assert float(row[1]) == pytest.approx(0.75 ** 1.5 / (5 / 16) ** 0.5, abs=1e-12)
        assert row[2] == "family:mnms3"


class TestExitCodes:

    def test_unknown_command(self, capsys) -> None:
        with pytest.raises(SystemExit) as exc:
            cli.main(["nonloc", "bogus"])
        assert exc.value.code == 2

    def test_unknown_flag(self, capsys) -> None:
        with pytest.raises(SystemExit) as exc:
            cli.main(["game", "classical", "--players", "3"])
        assert exc.value.code == 2

    def test_domain_error(self, capsys) -> None:
        code, _, err = run(capsys, "nonloc", "chsh-max", "--family", "mems", "--param", "2")
        assert code == 1
        assert err.startswith("error:")

    def test_missing_state(self, capsys) -> None:
        code, _, err = run(capsys, "state", "entropy")
        assert code == 1
        assert "--family" in err

    def test_unreadable_state_file(self, capsys, tmp_path) -> None:
        code, _, err = run(capsys, "nonloc", "chsh-max", "--state", str(tmp_path / "absent.json"))
        assert code == 1
        assert "absent.json" in err

    def test_wrong_qubit_count(self, capsys) -> None:
        code, _, _ = run(capsys, "nonloc", "chsh-max", "--family", "ghz")
        assert code == 1

    def test_verify_failure_exits_nonzero(self, capsys, monkeypatch, tmp_path) -> None:
        monkeypatch.setattr(cli, "run_all", lambda seed: [CheckResult("tsirelson", False, "forced")])
        out = tmp_path / "verify.json"
        assert cli.main(["verify", "all", "--out", str(out)]) == 1
        assert json.loads(out.read_text())["checks"][0]["passed"] is False
