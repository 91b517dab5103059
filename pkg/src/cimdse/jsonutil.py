"""JSON helpers with exact rational numbers.

All energy and bandwidth figures in this package are rationals, never
floats.  Files written by :func:`dump_json` round-trip losslessly through
:func:`load_json`: integers stay JSON integers, decimal literals such as
``124.69`` are parsed exactly (``12469/100``), and non-decimal rationals
are written as ``"num/den"`` strings.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path


def as_rational(value) -> Fraction:
    """Coerce a JSON-derived value (int, Fraction, float, or string like
    ``"4/3"`` / ``"0.26"``) to an exact Fraction."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        # only reached for values not routed through parse_float
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"invalid rational literal {value!r}") from exc
    raise ValueError(f"expected a number, got {value!r}")


def rational_to_json(value: Fraction):
    """Render a Fraction as a JSON-safe value.

    Integers become JSON ints.  Rationals with a terminating decimal
    expansion become decimal strings ("0.26"); everything else becomes a
    "num/den" string ("4/3").  Both forms parse back via as_rational.
    """
    value = Fraction(value)
    if value.denominator == 1:
        return int(value)
    den = value.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1 and max(twos, fives) <= 12:
        digits = max(twos, fives)
        scaled = value * 10**digits
        text = str(abs(int(scaled))).rjust(digits + 1, "0")
        sign = "-" if value < 0 else ""
        return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return f"{value.numerator}/{value.denominator}"


def loads_json(text: str):
    """Parse JSON text with floats read as exact Fractions."""
    return json.loads(text, parse_float=Fraction)


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc
    try:
        return loads_json(text)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
