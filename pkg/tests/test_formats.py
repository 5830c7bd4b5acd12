import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokeswaves.formats import branch_columns, fmt, to_json, write_branch_csv


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_floats(x):
    assert float(fmt(x)) == x


def test_fmt_special_values():
    assert [fmt(v) for v in (3, np.int64(-2), True, None, math.inf, -math.inf, math.nan)] == [
        "3", "-2", "true", "", "inf", "-inf", "nan"
    ]
    assert fmt(0.1) == "0.10000000000000001"


@given(st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.floats(allow_nan=False) | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=4), inner, max_size=4),
    max_leaves=12,
))
def test_to_json_is_valid_json(obj):
    back = json.loads(to_json(obj))
    expected = json.loads(json.dumps(obj, allow_nan=True).replace("Infinity", '"inf"').replace('-"inf"', '"-inf"'))
    assert back == expected


def test_to_json_keeps_key_order_and_numpy_types():
    text = to_json({"b": np.float64(0.5), "a": np.arange(3), "n": [{"x": np.bool_(False)}]})
    assert list(json.loads(text)) == ["b", "a"] + ["n"]
    assert json.loads(text) == {"b": 0.5, "a": [0, 1, 2], "n": [{"x": False}]}
    assert '"a": [0, 1, 2]' in text
    with pytest.raises(TypeError):
        to_json({"x": object()})


class _Point:
    c, amplitude, momentum, residual_norm = 1.25, 0.01, -3e-5, 1e-14

    def harmonics(self, n):
        return [0.01 / k for k in range(1, n + 1)]


def test_branch_csv_layout():
    buf = io.StringIO()
    write_branch_csv([_Point(), _Point()], buf, 2, extra={"side": ["above", "below"], "phi": [1e-6, -2e-6]})
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == ["side", "phi"] + branch_columns(2)
    assert lines[1] == "above,9.9999999999999995e-07,1.25,0.01,-3.0000000000000001e-05,1e-14,0.01,0.0050000000000000001"
    assert len(lines) == 3
