"""Exact Gaussian rationals.

A :class:`QQi` is a pair of :class:`fractions.Fraction` values ``re + i*im``.
It is the coefficient type of every jet and of every constant in the
expression language, so that no floating point ever enters the symbolic
side of the package.
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import Union

Scalar = Union["QQi", Rational, int]


class QQi:
    __slots__ = ("re", "im")

    def __init__(self, re: Rational | int = 0, im: Rational | int = 0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def coerce(cls, value) -> "QQi":
        if type(value) is cls:
            return value
        if isinstance(value, (int, Fraction, Rational)):
            return cls(Fraction(value))
        if isinstance(value, Decimal):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot convert {type(value).__name__} to an exact Gaussian rational")

    @classmethod
    def parse(cls, text: str) -> "QQi":
        """Parse ``"p/q"`` or a plain decimal into a real QQi."""
        return cls(Fraction(text.strip()))

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if type(other) is not QQi:
            if isinstance(other, (int, Rational)):
                return QQi(self.re + other, self.im)
            return NotImplemented
        return QQi(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not QQi:
            if isinstance(other, (int, Rational)):
                return QQi(self.re - other, self.im)
            return NotImplemented
        return QQi(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        if isinstance(other, (int, Rational)):
            return QQi(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if type(other) is not QQi:
            if isinstance(other, (int, Rational)):
                return QQi(self.re * other, self.im * other)
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return QQi(a * c)
        return QQi(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QQi.coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero Gaussian rational")
        c, d = other.re, other.im
        den = c * c + d * d
        a, b = self.re, self.im
        return QQi((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        return QQi.coerce(other) / self

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return QQi(1) / (self ** (-n))
        result = QQi(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "QQi":
        return QQi(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    # -- comparison / hashing ---------------------------------------------
    def __eq__(self, other):
        if type(other) is QQi:
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational)):
            return not self.im and self.re == other
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    # -- conversion --------------------------------------------------------
    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"QQi({self})"

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*i"


I = QQi(0, 1)
ZERO = QQi(0)
ONE = QQi(1)


def frac_str(x: Fraction) -> str:
    """Canonical ``"p/q"`` text used in every JSON report."""
    return f"{x.numerator}/{x.denominator}"
