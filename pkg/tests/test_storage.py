"""
tests/test_storage.py
Unit tests for JSON persistence: number formatting, file round trips and
path errors.

Run with:
    pytest tests/test_storage.py -v
"""
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import json
import math

import numpy as np
import pytest

from states import DensityMatrix, StateFamily, make_state
from storage import dumps, load_json, save_json


class TestDumps:

    def test_seventeen_significant_digits(self) -> None:
        assert dumps(0.1) == "0.10000000000000001\n"
        assert dumps({"s_value": math.sqrt(2)}) == '{\n  "s_value": 1.4142135623730951\n}\n'

    def test_whole_floats_stay_floats(self) -> None:
        text = dumps([1.0, -2.0, 3])
        assert json.loads(text) == [1.0, -2.0, 3]
        assert isinstance(json.loads(text)[0], float)
        assert isinstance(json.loads(text)[2], int)

    def test_exponent_form(self) -> None:
        assert json.loads(dumps(1e-20)) == 1e-20

    def test_numpy_floats(self) -> None:
        assert dumps(np.float64(0.75)) == "0.75\n"

    def test_bits_preserved(self) -> None:
        values = [1 / 3, 2 / 3 - 1e-17, np.nextafter(1.0, 2.0), 5e-324]
        assert json.loads(dumps(values)) == values

    @pytest.mark.parametrize("value", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_rejected(self, value) -> None:
        with pytest.raises(ValueError, match="not JSON compliant"):
            dumps({"x": value})


class TestFiles:

    def test_state_round_trip(self, tmp_path) -> None:
        rho = make_state(StateFamily.parse("mnms3", 0.03))
        path = save_json(rho.to_json(), tmp_path / "nested" / "rho.json")
        again = DensityMatrix.from_json(load_json(path))
        np.testing.assert_array_equal(again.mat, rho.mat)

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(OSError, match="missing.json"):
            load_json(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(OSError, match="Invalid JSON"):
            load_json(path)
