import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dualis.errors import InvariantError
from dualis.serialize import dumps, format_float, matrix_from_json, matrix_to_json


def test_format_float():
    assert format_float(1.0) == "1.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(1e-20) == "9.9999999999999995e-21"
    assert format_float(math.nan) == "null"
    assert format_float(math.inf) == "null"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_text_round_trips(x):
    assert float(format_float(x)) == x


def test_dumps_is_valid_json_and_deterministic():
    obj = {"b": [1, 2.5, None], "a": {"x": True, "y": np.float64(0.25)}, "c": []}
    text = dumps(obj)
    assert json.loads(text) == {"b": [1, 2.5, None], "a": {"x": True, "y": 0.25}, "c": []}
    assert dumps(obj) == text
    assert text.endswith("\n")


def test_dumps_non_finite_is_null():
    assert json.loads(dumps({"v": float("inf")})) == {"v": None}


def test_dumps_rejects_unknown_types():
    with pytest.raises(TypeError):
        dumps({"v": object()})


def test_matrix_round_trip_exact():
    m = np.random.default_rng(0).standard_normal((3, 4)) + 1j * np.random.default_rng(1).standard_normal((3, 4))
    back = matrix_from_json(json.loads(dumps(matrix_to_json(m))))
    assert np.array_equal(back, m)


def test_matrix_imag_optional():
    assert np.array_equal(matrix_from_json({"rows": 1, "cols": 2, "re": [1, 2]}), np.array([[1, 2]], complex))


@pytest.mark.parametrize("bad", [
    {"rows": 2, "cols": 2, "re": [1, 2, 3]},
    {"rows": 0, "cols": 0, "re": []},
    {"cols": 1, "re": [1]},
    {"rows": 1, "cols": 1, "re": ["x"]},
    {"rows": 1, "cols": 1, "re": [1e400]},
])
def test_matrix_malformed(bad):
    with pytest.raises(InvariantError):
        matrix_from_json(bad)
