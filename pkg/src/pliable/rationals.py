"""Rational parsing and formatting helpers."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

from .errors import InvalidInput


def as_rational(x) -> Fraction:
    """Coerce int, Fraction or a "p/q" string into a Fraction; floats are refused."""
    if isinstance(x, bool):
        raise InvalidInput("booleans are not rationals")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInput(f"not a rational: {x!r}") from exc
    raise InvalidInput(f"not an exact rational: {x!r}")


def fmt(q: Fraction) -> str:
    """Render as "p/q", always with an explicit denominator."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def surrogate_factor(eps) -> Fraction:
    """Rational stand-in r(eps) = 1/(1+eps) for exp(-eps).

    r(eps) >= exp(-eps), so demanding a factor of at least r(eps) is the stricter test.
    """
    eps = as_rational(eps)
    if eps < 0:
        raise InvalidInput("epsilon must be nonnegative")
    return 1 / (1 + eps)


def sqrt_upper(q, denominator: int = 10**6) -> Fraction:
    """Least m/denominator whose square is at least q."""
    q = as_rational(q)
    if q < 0:
        raise InvalidInput("square root of a negative rational")
    target = q * denominator * denominator
    t = -((-target.numerator) // target.denominator)  # ceil
    m = isqrt(t)
    if m * m < t:
        m += 1
    return Fraction(m, denominator)
