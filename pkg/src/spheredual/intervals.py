"""Closed rational intervals with outward rounding to a dyadic grid.

Endpoints are gmpy2 mpq.  Every operation returns an interval containing
all results of the exact operation on members; ``rounded`` keeps endpoint
sizes bounded by snapping outward to multiples of 2^-bits (relative to the
magnitude).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpq, mpz

DEFAULT_BITS = 256


def _floor_dyadic(x: mpq, bits: int) -> mpq:
    """Largest multiple of 2^(ilog2|x| - bits) that is <= x."""
    if x == 0:
        return x
    e = bits - (x.numerator.bit_length() - x.denominator.bit_length())
    if e >= 0:
        s = x * (mpz(1) << e)
        return mpq(s.numerator // s.denominator, mpz(1) << e)
    s = x / (mpz(1) << -e)
    return mpq((s.numerator // s.denominator) << -e)


def _ceil_dyadic(x: mpq, bits: int) -> mpq:
    return -_floor_dyadic(-x, bits)


@dataclass(frozen=True)
class Interval:
    lo: mpq
    hi: mpq

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> "Interval":
        v = x if isinstance(x, type(mpq())) else mpq(Fraction(x).numerator, Fraction(x).denominator)
        return cls(v, v)

    @classmethod
    def of(cls, lo, hi) -> "Interval":
        return cls(_mpq(lo), _mpq(hi))

    def rounded(self, bits: int = DEFAULT_BITS) -> "Interval":
        if self.lo == self.hi and self.lo.denominator == 1:
            return self
        return Interval(_floor_dyadic(self.lo, bits), _ceil_dyadic(self.hi, bits))

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def mid(self) -> mpq:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> mpq:
        return self.hi - self.lo

    @property
    def mag(self) -> mpq:
        """max |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> mpq:
        """min |x| over the interval."""
        if self.lo <= 0 <= self.hi:
            return mpq(0)
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        x = _mpq(x)
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def sign(self) -> int | None:
        """+1 / -1 / 0 when decided, None when the interval straddles zero."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None

    def __add__(self, other) -> "Interval":
        o = _iv(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        return self + (-_iv(other))

    def __rsub__(self, other) -> "Interval":
        return _iv(other) - self

    def __mul__(self, other) -> "Interval":
        o = _iv(other)
        if self.is_point and o.is_point:
            v = self.lo * o.lo
            return Interval(v, v)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other) -> "Interval":
        return self * _iv(other).reciprocal()

    def __abs__(self) -> "Interval":
        return Interval(self.mig, self.mag)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def render(self) -> str:
        return f"{_fmt(self.lo)}:{_fmt(self.hi)}"

    @classmethod
    def parse(cls, text: str) -> "Interval":
        lo, _, hi = text.partition(":")
        if not hi:
            hi = lo
        return cls(mpq(lo), mpq(hi))

    def to_fractions(self) -> tuple[Fraction, Fraction]:
        return _frac(self.lo), _frac(self.hi)


def _mpq(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def _iv(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(_mpq(x))


def _frac(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def _fmt(x: mpq) -> str:
    return str(int(x.numerator)) if x.denominator == 1 else f"{int(x.numerator)}/{int(x.denominator)}"


def horner(coeffs, x: Interval, bits: int = DEFAULT_BITS) -> Interval:
    """Enclosure of sum_i coeffs[i] x^i (coefficients exact, lowest degree first)."""
    if x.is_point:
        v = mpq(0)
        for c in reversed(coeffs):
            v = v * x.lo + _mpq(c)
        return Interval(v, v)
    acc = Interval.point(mpq(0))
    for c in reversed(coeffs):
        acc = (acc * x + _mpq(c)).rounded(bits)
    return acc
