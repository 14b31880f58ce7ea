from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spheredual.pipeline import (
    CERTIFIED_STATUS,
    ERROR_STATUS,
    INFEASIBLE_STATUS,
    ConfigError,
    RunConfig,
    bound_value,
    compute_dual_bound,
    emit_dual_distribution,
    report_from_machine,
    report_to_machine,
    report_to_text,
    round_down,
    scan_T,
)

F = Fraction


@pytest.mark.parametrize(
    "d, N, T, bound",
    [(8, 1, 1, F(1, 16)), (24, 1, 2, F(1)), (16, 4, 2, F(1, 16)), (16, 4, 3, F(3**8, 2**16)), (16, 4, 4, F(1, 16))],
)
def test_exact_bounds(d, N, T, bound):
    rep = compute_dual_bound(RunConfig(d, N, T))
    assert rep.status == CERTIFIED_STATUS
    assert rep.bound == bound
    assert rep.sqrt_power == 0


def test_level4_decimal():
    rep = compute_dual_bound(RunConfig(16, 4, 3))
    assert rep.decimal == "0.100112"
    assert rep.x == [F(1, 136), F(-121, 2176), F(1, 136), F(-60, 17), F(-60, 17)]


def test_level4_t4_is_rescaled_barnes_wall(basis_k8_n4):
    rep = compute_dual_bound(RunConfig(16, 4, 4))
    g = basis_k8_n4.combine(rep.x)
    bw = basis_k8_n4.combine([F(1, 17), F(1, 17), 0, F(-480, 17), 0])
    assert all(g[2 * n] == bw[n] for n in range(basis_k8_n4.order // 2 + 1))
    assert all(g[n] == 0 for n in range(1, basis_k8_n4.order + 1, 2))


def test_bound_formula():
    assert bound_value(F(1), 16, 4, 3) == F(3**8, 2**16)
    assert bound_value(F(16), 16, 4, 2) == F(1, 16)


@pytest.mark.parametrize(
    "x, digits, text",
    [(F(1, 16), 6, "0.062500"), (F(2, 3), 2, "0.66"), (F(-1, 3), 6, "-0.333334"), (F(5), 0, "5"), (F(3**8, 2**16), 6, "0.100112")],
)
def test_round_down(x, digits, text):
    assert round_down(x, digits) == text


@given(st.fractions(min_value=-100, max_value=100), st.integers(0, 8))
def test_round_down_is_directed(x, digits):
    v = F(round_down(x, digits))
    assert v <= x < v + F(1, 10**digits)


def test_scan_level4():
    res = scan_T(RunConfig(16, 4, t_range=(2, 4)))
    assert [r.bound for r in res.reports] == [F(1, 16), F(3**8, 2**16), F(1, 16)]
    assert res.best.T == 3


def test_scan_parallel_matches_serial():
    a = scan_T(RunConfig(16, 4, t_range=(1, 5)))
    b = scan_T(RunConfig(16, 4, t_range=(1, 5), jobs=2))
    assert [(r.T, r.status, r.bound) for r in a.reports] == [(r.T, r.status, r.bound) for r in b.reports]


def test_infeasible_t_recorded():
    res = scan_T(RunConfig(16, 4, t_range=(4, 5)))
    assert [r.status for r in res.reports] == [CERTIFIED_STATUS, INFEASIBLE_STATUS]
    assert [r.T for r in res.failures] == [5]


def test_t_out_of_range_is_reported():
    rep = compute_dual_bound(RunConfig(12, 1, 2))
    assert rep.status == ERROR_STATUS and "T" in rep.reason


@pytest.mark.parametrize(
    "cfg",
    [RunConfig(10, 1, 1), RunConfig(4, 1, 1), RunConfig(8, 50, 1), RunConfig(8, 1), RunConfig(8, 1, 0), RunConfig(8, 1, t_range=(3, 2))],
)
def test_config_validation(cfg):
    with pytest.raises(ConfigError):
        cfg.validate()


def test_machine_round_trip():
    rep = compute_dual_bound(RunConfig(16, 4, 3))
    text = report_to_machine(rep)
    assert "bound=6561/65536" in text
    back = report_from_machine(text)
    assert back.bound == rep.bound and back.x == rep.x and back.status == rep.status
    assert back.cert_g.C_g == rep.cert_g.C_g and back.cert_gt.Q == rep.cert_gt.Q
    assert report_to_machine(back) == text


def test_text_report_mentions_bound():
    text = report_to_text(compute_dual_bound(RunConfig(8, 1, 1)))
    assert "1/16" in text and "0.062500" in text


def test_distribution_level4(basis_k8_n4):
    rep = compute_dual_bound(RunConfig(16, 4, 3), basis_k8_n4)
    dist = rep.distribution
    assert dist.primal[0] == (0, 1)
    assert dist.primal[1] == (3, 7680)
    gt = basis_k8_n4.combine_al(rep.x)
    # c = (2/sqrt 4)^8 = 1, dual radius^2 = 4n/N = n
    assert rep.c == 1
    assert dist.dual == [(F(n), gt[n]) for n in range(rep.M + 1) if gt[n]]


def test_distribution_level1():
    rep = compute_dual_bound(RunConfig(8, 1, 1))
    assert rep.distribution.primal[1] == (1, 240)


@given(st.fractions(min_value=F(1, 20), max_value=20))
def test_distribution_scale_cancels(basis_k4_n1, lam):
    rep = compute_dual_bound(RunConfig(8, 1, 1), basis_k4_n1)
    dist = emit_dual_distribution(rep, basis_k4_n1, lam)
    for i in range(1, 4):
        prod = dist.radius_squared("primal", i) * dist.radius_squared("dual", i)
        assert prod == dist.primal[i][0] * dist.dual[i][0]
