"""Truncated q-expansions with exact rational coefficients.

A :class:`QSeries` is an immutable value holding the coefficients of
``q^0 .. q^M``.  Binary operations truncate to the smaller order of their
operands, and asking for a coefficient past ``M`` raises instead of
returning zero.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

Rat = Fraction


def rat(x) -> Fraction:
    """Coerce an int, Fraction, gmpy2 mpq or ``"a/b"`` string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class TruncationError(IndexError):
    """Raised when a coefficient beyond the truncation order is requested."""


class QSeries:
    """Truncated power series ``sum_{n<=M} c_n q^n`` over the rationals."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        c = [rat(x) for x in coeffs]
        if order is not None:
            if order < 0:
                raise ValueError("truncation order must be >= 0")
            if len(c) > order + 1:
                c = c[: order + 1]
            else:
                c.extend([Fraction(0)] * (order + 1 - len(c)))
        if not c:
            raise ValueError("a QSeries needs at least the constant coefficient")
        self._c = tuple(c)

    @classmethod
    def zero(cls, order: int) -> "QSeries":
        return cls([], order)

    @classmethod
    def one(cls, order: int) -> "QSeries":
        return cls([1], order)

    @classmethod
    def _trusted(cls, coeffs: tuple) -> "QSeries":
        s = object.__new__(cls)
        s._c = coeffs
        return s

    @property
    def order(self) -> int:
        return len(self._c) - 1

    @property
    def coeffs(self) -> tuple:
        return self._c

    def __len__(self) -> int:
        return len(self._c)

    def __getitem__(self, n):
        if isinstance(n, slice):
            return self._c[n]
        if n < 0:
            raise IndexError("negative q-power")
        if n > self.order:
            raise TruncationError(f"coefficient of q^{n} unknown (truncated at q^{self.order})")
        return self._c[n]

    def __iter__(self):
        return iter(self._c)

    def truncate(self, order: int) -> "QSeries":
        if order > self.order:
            raise TruncationError(f"cannot extend a series known to q^{self.order} up to q^{order}")
        return QSeries._trusted(self._c[: order + 1])

    def valuation(self) -> int | None:
        for n, x in enumerate(self._c):
            if x:
                return n
        return None

    def is_zero(self) -> bool:
        return not any(self._c)

    def denominator(self) -> int:
        return lcm(*(x.denominator for x in self._c))

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(self._c)

    def __add__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        return series_add(self, other)

    def __sub__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        m = min(self.order, other.order)
        return QSeries._trusted(tuple(a - b for a, b in zip(self._c[: m + 1], other._c)))

    def __neg__(self):
        return QSeries._trusted(tuple(-a for a in self._c))

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return series_mul(self, other)
        try:
            return series_scale(rat(other), self)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other):
        try:
            return series_scale(rat(other), self)
        except TypeError:
            return NotImplemented

    def __repr__(self):
        head = " + ".join(f"{c}*q^{n}" for n, c in enumerate(self._c[:6]) if c) or "0"
        return f"QSeries({head}{' + ...' if self.order > 5 else ''}; O(q^{self.order + 1}))"

    def render(self) -> str:
        return render_series(self)


def series_add(a: QSeries, b: QSeries) -> QSeries:
    m = min(a.order, b.order)
    return QSeries._trusted(tuple(x + y for x, y in zip(a._c[: m + 1], b._c)))


def _integer_form(c: Sequence[Fraction]) -> tuple[list[int], int]:
    den = lcm(*(x.denominator for x in c))
    return [x.numerator * (den // x.denominator) for x in c], den


def int_convolve(a: Sequence[int], b: Sequence[int], m: int) -> list[int]:
    """Schoolbook product of integer coefficient lists, truncated at q^m."""
    out = [0] * (m + 1)
    bb = list(b[: m + 1])
    for i, x in enumerate(a[: m + 1]):
        if x:
            lim = m - i
            for j, y in enumerate(bb[: lim + 1]):
                if y:
                    out[i + j] += x * y
    return out


def series_mul(a: QSeries, b: QSeries) -> QSeries:
    m = min(a.order, b.order)
    ia, da = _integer_form(a._c[: m + 1])
    ib, db = _integer_form(b._c[: m + 1])
    prod = int_convolve(ia, ib, m)
    den = da * db
    return QSeries._trusted(tuple(Fraction(x, den) for x in prod))


def series_scale(c, a: QSeries) -> QSeries:
    c = rat(c)
    return QSeries._trusted(tuple(c * x for x in a._c))


def series_v_operator(t: int, a: QSeries) -> QSeries:
    """Substitute q -> q^t, keeping the truncation order."""
    if t < 1:
        raise ValueError("V-operator needs t >= 1")
    m = a.order
    out = [Fraction(0)] * (m + 1)
    for n in range(0, m // t + 1):
        out[n * t] = a._c[n]
    return QSeries._trusted(tuple(out))


def linear_combination(coeffs: Sequence, series: Sequence[QSeries]) -> QSeries:
    """``sum_j coeffs[j] * series[j]`` truncated to the common order."""
    if not series:
        raise ValueError("empty combination")
    m = min(s.order for s in series)
    acc = [Fraction(0)] * (m + 1)
    for c, s in zip(coeffs, series):
        c = rat(c)
        if c:
            sc = s._c
            for n in range(m + 1):
                if sc[n]:
                    acc[n] += c * sc[n]
    return QSeries._trusted(tuple(acc))


def format_rat(x) -> str:
    x = rat(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def render_series(a: QSeries) -> str:
    return " ".join(format_rat(x) for x in a._c)


def parse_series(text: str) -> QSeries:
    parts = text.split()
    if not parts:
        raise ValueError("empty coefficient line")
    return QSeries([Fraction(p) for p in parts])
