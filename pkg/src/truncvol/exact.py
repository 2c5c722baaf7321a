"""Exact rational scalars and bit-length bookkeeping.

Every numeric quantity in the package is a :class:`fractions.Fraction`
(aliased here as ``Rational``) or a Python ``int``. Nothing is ever rounded.
Across file and command-line boundaries rationals travel as ``"p/q"``
strings; ``format_rational`` always emits the denominator, ``parse_rational``
also accepts a bare integer.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

from .errors import ParseError

Rational = Fraction
RationalLike = Union[int, Fraction, str]

_RATIONAL_RE = re.compile(r"-?[0-9]+(?:/[0-9]+)?")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` (optional leading ``-``, no whitespace) or ``"p"``."""
    if not isinstance(text, str) or not _RATIONAL_RE.fullmatch(text):
        raise ParseError(f"not a rational literal: {text!r}")
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ParseError(f"zero denominator: {text!r}")
    return Fraction(int(num), int(den) if den else 1)


def format_rational(x: int | Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def as_rational(x: RationalLike) -> Fraction:
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, bool) or not isinstance(x, (int, Fraction)):
        raise TypeError(f"expected int, Fraction or 'p/q' string, got {type(x).__name__}")
    return Fraction(x)


def ceil_log2(m: int) -> int:
    """``ceil(log2(m))`` for an integer ``m >= 1``."""
    if m < 1:
        raise ValueError("ceil_log2 needs m >= 1")
    return (m - 1).bit_length()


def encoding_length(x: int | Fraction) -> int:
    """Bits needed to write ``p/q``: ``ceil(log(|p|+1)) + ceil(log(q+1))``.

    >>> encoding_length(Fraction(3, 2))
    4
    """
    x = Fraction(x)
    return ceil_log2(abs(x.numerator) + 1) + ceil_log2(x.denominator + 1)


def min_gap(L: int) -> Fraction:
    """Separation ``2**(-2L)`` between distinct rationals of encoding length <= L."""
    if L < 1:
        raise ValueError("min_gap needs L >= 1")
    return Fraction(1, 1 << (2 * L))


def ceil_sqrt(m: int) -> int:
    if m < 0:
        raise ValueError("ceil_sqrt of a negative number")
    r = math.isqrt(m)
    return r if r * r == m else r + 1


def ceil_n_pow_2_5(n: int) -> int:
    """``ceil(n ** 2.5)`` computed exactly as the integer ceiling of ``sqrt(n**5)``."""
    return ceil_sqrt(n**5)


def sqrt_upper(n: int, bits: int = 64) -> Fraction:
    """Rational upper bound on ``sqrt(n)`` that is within ``2**-bits`` of it."""
    return Fraction(ceil_sqrt(n << (2 * bits)), 1 << bits)


def sqrt_lower(n: int, bits: int = 64) -> Fraction:
    return Fraction(math.isqrt(n << (2 * bits)), 1 << bits)


def floor_rational(x: Fraction) -> int:
    return x.numerator // x.denominator


def ceil_rational(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def lcm_denominators(values) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, Fraction(v).denominator)
    return d
