from math import gcd

import pytest
from gmpy2 import mpq

from spheredual.eigenforms import EigenDataError, EigenEntry, EigenformData, compute_eigen_data, load_eigen, save_eigen
from spheredual.intervals import Interval
from spheredual.modspace import assemble_basis, cusp_dimension, eta_qexp, EtaQuotient


def _overlap(a: Interval, b: Interval) -> bool:
    return a.lo <= b.hi and b.lo <= a.hi


def _values(entry):
    return [c.lo for c in entry.coeffs]


@pytest.fixture(scope="module")
def eigen_k8_n5():
    return compute_eigen_data(assemble_basis(8, 5))


def test_level_4_eigenbasis(eigen_k8_n4):
    E = eigen_k8_n4
    assert len(E.entries) == 2 and all(e.exact for e in E.entries)
    f = eta_qexp(EtaQuotient.from_dict(2, {1: 8, 2: 8}), E.order)
    assert _values(E.entries[0]) == [mpq(c.numerator, c.denominator) for c in f.coeffs[1:]]
    # second entry is f(2z)
    assert [v for v in _values(E.entries[1])[1::2]] == _values(E.entries[0])[: E.order // 2]


def test_level_1_delta():
    E = compute_eigen_data(assemble_basis(12, 1, 30), order=30)
    (delta,) = E.entries
    tau = eta_qexp(EtaQuotient.from_dict(1, {1: 24}), E.order)
    assert _values(delta)[:6] == [1, -24, 252, -1472, 4830, -6048]
    assert _values(delta) == [mpq(int(c)) for c in tau.coeffs[1:]]


@pytest.mark.parametrize("k, N", [(8, 4), (8, 5), (6, 7), (8, 6), (10, 6)])
def test_entry_count_is_cusp_dimension(k, N):
    E = compute_eigen_data(assemble_basis(k, N))
    assert len(E.entries) == cusp_dimension(k, N)
    E.check()


def test_newform_rational_coefficients(eigen_k8_n5):
    rational = [e for e in eigen_k8_n5.entries if e.exact]
    assert len(rational) == 1 and _values(rational[0])[1] == -14


@pytest.mark.parametrize("k, N", [(8, 5), (6, 7)])
def test_irrational_enclosures_are_multiplicative(k, N):
    E = compute_eigen_data(assemble_basis(k, N))
    for e in E.entries:
        c = e.coeffs
        for m in range(2, 8):
            for n in range(m + 1, 8):
                if gcd(m, n) == 1 and m * n <= E.order:
                    assert _overlap(c[m - 1] * c[n - 1], c[m * n - 1])
        for p in (2, 3):
            if p * p <= E.order and N % p:
                assert _overlap(c[p - 1] * c[p - 1] - Interval.point(mpq(p ** (k - 1))), c[p * p - 1])


def test_conjugate_traces_are_integers(eigen_k8_n5):
    conj = [e for e in eigen_k8_n5.entries if not e.exact]
    assert len(conj) == 2
    for n in range(1, eigen_k8_n5.order + 1):
        tr = conj[0].coeffs[n - 1] + conj[1].coeffs[n - 1]
        nearest = round(float(tr.mid))
        assert tr.contains(nearest)


def test_save_load_round_trip(tmp_path, eigen_k8_n5):
    p = tmp_path / "eigen.txt"
    save_eigen(eigen_k8_n5, p)
    again = load_eigen(p)
    assert [e.label for e in again.entries] == [e.label for e in eigen_k8_n5.entries]
    assert [e.coeffs for e in again.entries] == [e.coeffs for e in eigen_k8_n5.entries]


def test_deligne_violation_rejected():
    bad = EigenEntry("h", [Interval.point(mpq(1)), Interval.point(mpq(10**6))])
    with pytest.raises(EigenDataError):
        EigenformData(2, 8, 2, [bad]).check()


def test_leading_coefficient_checked():
    bad = EigenEntry("h", [Interval.point(mpq(2)), Interval.point(mpq(0))])
    with pytest.raises(EigenDataError):
        EigenformData(2, 8, 2, [bad]).check()


def test_length_mismatch_rejected():
    with pytest.raises(EigenDataError):
        EigenformData(2, 8, 3, [EigenEntry("h", [Interval.point(mpq(1))])])


def test_deligne_example_level_2():
    # |c_5| = 210 <= 2 * 5^3.5 for f = eta(z)^8 eta(2z)^8
    assert 210**2 <= 4 * 5**7
