import random
from fractions import Fraction

import pytest

from cimdse.jsonutil import as_rational, dump_json, load_json, loads_json, rational_to_json


def test_as_rational_accepts_common_forms():
    assert as_rational(3) == Fraction(3)
    assert as_rational(Fraction(7, 2)) == Fraction(7, 2)
    assert as_rational("4/3") == Fraction(4, 3)
    assert as_rational("0.26") == Fraction(26, 100)
    assert as_rational("-1.5") == Fraction(-3, 2)
    assert as_rational(0.5) == Fraction(1, 2)


@pytest.mark.parametrize("bad", [True, False, "abc", "1/0", None, [1]])
def test_as_rational_rejects_garbage(bad):
    with pytest.raises(ValueError):
        as_rational(bad)


def test_rational_to_json_forms():
    assert rational_to_json(Fraction(5)) == 5
    assert rational_to_json(Fraction(26, 100)) == "0.26"
    assert rational_to_json(Fraction(12469, 100)) == "124.69"
    assert rational_to_json(Fraction(4, 3)) == "4/3"
    assert rational_to_json(Fraction(-3, 2)) == "-1.5"
    assert rational_to_json(Fraction(1, 1024)) == "0.0009765625"


def test_rational_round_trip_random():
    rng = random.Random(0)
    for _ in range(500):
        value = Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 10**6))
        assert as_rational(rational_to_json(value)) == value


def test_loads_json_keeps_floats_exact():
    obj = loads_json('{"x": 124.69, "y": 2, "z": "4/3"}')
    assert obj["x"] == Fraction(12469, 100)
    assert isinstance(obj["x"], Fraction)
    assert obj["y"] == 2
    assert as_rational(obj["z"]) == Fraction(4, 3)


def test_load_json_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValueError, match="invalid JSON"):
        load_json(bad)


def test_dump_json_round_trips_through_file(tmp_path):
    path = tmp_path / "out.json"
    text = dump_json({"a": [1, 2], "b": "0.26"}, path)
    assert text.endswith("\n")
    assert path.read_text() == text
    assert load_json(path) == {"a": [1, 2], "b": "0.26"}
