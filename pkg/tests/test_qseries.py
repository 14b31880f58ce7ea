from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from spheredual.qseries import (
    QSeries,
    TruncationError,
    linear_combination,
    parse_series,
    render_series,
    series_add,
    series_mul,
    series_scale,
    series_v_operator,
)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=12)


@st.composite
def series(draw, order=None):
    m = draw(st.integers(0, 8)) if order is None else order
    return QSeries(draw(st.lists(fractions, min_size=m + 1, max_size=m + 1)))


@st.composite
def series_triple(draw):
    m = draw(st.integers(0, 8))
    return draw(series(m)), draw(series(m)), draw(series(m))


def test_add_cancellation():
    s = series_add(QSeries([1, 1, 0, 0]), QSeries([1, -1, 0, 0]))
    assert s == QSeries([2], 3)


def test_add_zero_truncates():
    g = QSeries(range(1, 10))
    assert QSeries.zero(5) + g == g.truncate(5)


def test_add_e4_and_delta():
    e4 = QSeries([1, 240, 2160])
    delta = QSeries([0, 1, -24])
    assert e4 + delta == QSeries([1, 241, 2136])


def test_mul_small():
    assert series_mul(QSeries([1, 1, 0]), QSeries([1, -1, 0])) == QSeries([1, 0, -1])
    assert QSeries([1, 1]) * QSeries([1, 1]) == QSeries([1, 2])


def test_mul_delta_product():
    M = 3
    prod = QSeries([0, 1], M)
    for n in range(1, M + 1):
        factor = QSeries([1] + [0] * (n - 1) + [-1], M)
        for _ in range(24):
            prod = prod * factor
    assert prod.coeffs == (0, 1, -24, 252)


def test_scale():
    g = QSeries([3, 1, 4])
    assert series_scale(0, g) == QSeries.zero(2)
    s = series_scale(240, QSeries([Fraction(1, 240), 1, 9]))
    assert s.coeffs == (1, 240, 2160)
    assert 2 * g == g * 2 == series_scale(2, g)


@pytest.mark.parametrize(
    "t, coeffs, expected",
    [
        (1, [1, 2, 3, 4, 5], [1, 2, 3, 4, 5]),
        (2, [1, 1, 0, 0, 0], [1, 0, 1, 0, 0]),
        (3, [1, 2, 3, 4, 5, 6, 7], [1, 0, 0, 2, 0, 0, 3]),
    ],
)
def test_v_operator(t, coeffs, expected):
    assert series_v_operator(t, QSeries(coeffs)) == QSeries(expected)


def test_v_operator_rejects_zero():
    with pytest.raises(ValueError):
        series_v_operator(0, QSeries([1]))


def test_truncated_coefficient_raises():
    g = QSeries([1, 2, 3])
    assert g[2] == 3
    with pytest.raises(TruncationError):
        g[3]
    with pytest.raises(TruncationError):
        g.truncate(5)


def test_constructor_padding_and_errors():
    assert QSeries([1], 3).coeffs == (1, 0, 0, 0)
    assert QSeries([1, 2, 3, 4], 1).coeffs == (1, 2)
    with pytest.raises(ValueError):
        QSeries([])
    with pytest.raises(ValueError):
        QSeries([1], -1)
    with pytest.raises(TypeError):
        QSeries([1.5])


def test_valuation_and_denominator():
    g = QSeries([0, 0, Fraction(1, 6), Fraction(3, 4)])
    assert g.valuation() == 2
    assert g.denominator() == 12
    assert QSeries.zero(4).valuation() is None


def test_linear_combination_common_order():
    out = linear_combination([2, -1], [QSeries([1, 1, 1]), QSeries([0, 1, 2, 3])])
    assert out == QSeries([2, 1, 0])


@given(series_triple())
def test_ring_axioms(abc):
    a, b, c = abc
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == QSeries.zero(a.order)
    assert a * QSeries.one(a.order) == a


@given(series(), series())
def test_order_is_minimum(a, b):
    m = min(a.order, b.order)
    assert (a + b).order == m
    assert (a * b).order == m


@given(series(), st.integers(1, 4), st.integers(1, 4))
def test_v_operator_composes_and_is_multiplicative(a, s, t):
    assert series_v_operator(s, series_v_operator(t, a)) == series_v_operator(s * t, a)
    assert series_v_operator(t, a * a) == series_v_operator(t, a) * series_v_operator(t, a)


@settings(max_examples=50)
@given(series())
def test_render_round_trip(a):
    assert parse_series(render_series(a)) == a
