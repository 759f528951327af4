import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from henon_lab import ConfigError, MapConfig
from henon_lab.config import format_config_text, parse_config_text
from henon_lab.io import csv_text, dumps, fmt


def test_derived_constants():
    c = MapConfig(b=1e-4, eps=0.1)
    assert c.sigma == 2 - 0.05
    assert (c.lambda1, c.lambda2) == (3.95, 4.05)
    assert c.beta == pytest.approx(2 / math.log(1e4))
    assert c.beta == pytest.approx(0.2171, abs=1e-4)
    assert c.b4 == pytest.approx(0.1)
    assert c.tau == pytest.approx(c.sigma / 100 * math.log(2))


@pytest.mark.parametrize("bad", [{"b": 1.5}, {"s": 0}, {"eps": 0.0}, {"delta": 2.0},
                                 {"tau": 1.0}, {"a": math.inf}, {"horizon": 0}])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        MapConfig(**bad)


def test_text_round_trip():
    c = MapConfig(b=1e-3, s=-1, eps=0.05, seed=7)
    again = MapConfig.from_mapping(parse_config_text(format_config_text(c)))
    assert again == c


def test_parser_comments_and_errors():
    assert parse_config_text("# header\n b = 0.01  # trailing\n\n") == {"b": "0.01"}
    with pytest.raises(ConfigError):
        parse_config_text("just words")
    with pytest.raises(ConfigError):
        MapConfig.from_mapping({"nope": "1"})
    with pytest.raises(ConfigError):
        MapConfig.from_mapping({"b": "small"})


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_floats(v):
    assert float(fmt(v)) == v


def test_fmt_special_values():
    assert [fmt(math.nan), fmt(math.inf), fmt(-math.inf), fmt(True), fmt(3)] == ["nan", "inf", "-inf", "true", "3"]


@given(st.dictionaries(st.text(min_size=1, max_size=5),
                       st.one_of(st.floats(allow_nan=False, allow_infinity=False), st.integers(-10, 10),
                                 st.lists(st.floats(-1e3, 1e3), max_size=4)), max_size=5))
def test_dumps_is_canonical_and_lossless(d):
    text = dumps(d)
    assert json.loads(text) == json.loads(dumps(json.loads(text)))
    back = json.loads(text)
    for k, v in d.items():
        assert back[k] == v


def test_dumps_handles_numpy_and_nonfinite():
    text = dumps({"b": np.float64(0.1), "a": np.array([1.5, math.inf]), "c": np.bool_(True)})
    assert json.loads(text) == {"a": [1.5, "inf"], "b": 0.1, "c": True}
    assert text.index('"a"') < text.index('"b"')


def test_csv_text():
    assert csv_text(["x", "w"], [[0.1, "ab"]]) == "x,w\n0.10000000000000001,ab\n"
