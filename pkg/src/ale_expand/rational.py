"""Exact rational scalar used by every symbolic module.

gmpy2's ``mpq`` is preferred (roughly an order of magnitude faster than
``fractions.Fraction`` on the small operands that dominate here); the stdlib
type is the fallback.  Both print as ``"p/q"`` or ``"p"``.
"""
from fractions import Fraction

try:
    from gmpy2 import mpq as Rational
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    Rational = Fraction

ZERO = Rational(0)
ONE = Rational(1)


def as_rational(value):
    """Coerce ints, Fractions, ``"p/q"`` strings and Rationals to ``Rational``.

    Floats are refused: silently importing binary rounding error would defeat
    the exact residual checks.
    """
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact coefficients")
    if isinstance(value, Fraction):
        return Rational(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(ch in text for ch in ".eE"):
            raise ValueError(f"not an exact rational literal: {value!r}")
        frac = Fraction(text)
        return Rational(frac.numerator, frac.denominator)
    return Rational(value)
