import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from spheredual.lp import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LPParameterError,
    LPSolution,
    RowBasisSimplex,
    build_dual_lp,
    float_presolve_and_rationalize,
    simplex_solve,
    verify_certificate,
)
from spheredual.pipeline import echelon_transform, solve_lp

from lp_oracle import brute_force_max, random_bounded_lp, solve_exact

F = Fraction


def assemble_k8_n4_10():
    from spheredual.modspace import assemble_basis

    return assemble_basis(8, 4, 10)


def test_level4_program_rows():
    lp = build_dual_lp(assemble_k8_n4_10(), 3, 10)
    assert lp.nvars == 5
    assert lp.objective == [256, 16, 1, 0, 0]
    assert lp.eq_rows[0] == ([1, 16, 256, 0, 0], 1)
    assert lp.eq_rows[1] == ([480, 0, 0, 1, 0], 0)
    assert lp.eq_rows[2] == ([480 * 129, 7680, 0, -8, 16], 0)
    assert lp.eq_tags == ["a0=1", "a1=0", "a2=0"]
    assert lp.ge_tags[0] == "a3>=0" and lp.ge_tags[-1] == "b10>=0"
    assert len(lp.ge_rows) == (10 - 3 + 1) + 10


def test_level1_program(basis_k4_n1):
    lp = build_dual_lp(basis_k4_n1, 1, 4)
    assert lp.nvars == 1 and lp.objective == [1] and len(lp.eq_rows) == 1


@pytest.mark.parametrize("T, M", [(0, 10), (6, 10), (2, 4), (2, 11)])
def test_parameter_errors(T, M):
    with pytest.raises(LPParameterError):
        build_dual_lp(assemble_k8_n4_10(), T, M)


def test_dump_lists_every_row():
    lp = build_dual_lp(assemble_k8_n4_10(), 3, 10)
    text = lp.dump().splitlines()
    assert text[0] == "MAX 256 16 1 0 0"
    assert text[1] == "EQ a0=1 1 16 256 0 0 = 1"
    assert sum(ln.startswith("GE") for ln in text) == len(lp.ge_rows)


def test_level4_solution_t3():
    lp = build_dual_lp(assemble_k8_n4_10(), 3, 10)
    sol = simplex_solve(lp)
    assert sol.status == OPTIMAL
    assert sol.x == [F(1, 136), F(-121, 2176), F(1, 136), F(-60, 17), F(-60, 17)]
    assert sol.objective == 1
    assert verify_certificate(lp, sol)
    fl = float_presolve_and_rationalize(lp)
    assert fl.x == sol.x and fl.objective == sol.objective
    assert verify_certificate(lp, fl)


def test_barnes_wall_t2():
    b = assemble_k8_n4_10()
    lp = build_dual_lp(b, 2, 10)
    sol = simplex_solve(lp)
    assert sol.objective == 16
    g = b.combine(sol.x)
    assert g.coeffs[:5] == (1, 0, 4320, 61440, 522720)


def test_perturbation_breaks_certificate():
    lp = build_dual_lp(assemble_k8_n4_10(), 3, 10)
    sol = simplex_solve(lp)
    for j in range(5):
        x = list(sol.x)
        x[j] += F(1, 10**6)
        bad = LPSolution(OPTIMAL, x, None, sol.dual)
        assert not verify_certificate(lp, bad)


def test_zero_dual_rejected():
    lp = build_dual_lp(assemble_k8_n4_10(), 3, 10)
    sol = simplex_solve(lp)
    bad = LPSolution(OPTIMAL, sol.x, sol.objective, [F(0)] * len(sol.dual))
    assert not verify_certificate(lp, bad)
    assert not verify_certificate(lp, LPSolution(INFEASIBLE))


def test_trivial_lp():
    lp = LinearProgram([F(1)], [([F(1)], F(1))])
    a, b = simplex_solve(lp), float_presolve_and_rationalize(lp)
    assert a.x == b.x == [1] and a.objective == b.objective == 1


def test_infeasible_and_unbounded():
    infeasible = LinearProgram([F(1)], [], [([F(1)], F(2)), ([F(-1)], F(-1))])
    assert simplex_solve(infeasible).status == INFEASIBLE
    unbounded = LinearProgram([F(1)], [], [([F(1)], F(0))])
    assert simplex_solve(unbounded).status == UNBOUNDED
    assert float_presolve_and_rationalize(infeasible).status == INFEASIBLE


def _degenerate_lp():
    # five rows through the optimum (1, 1) of max x + y
    rows = [([F(-1), F(0)], F(-1)), ([F(0), F(-1)], F(-1)), ([F(-1), F(-1)], F(-2))]
    rows += [([F(-2), F(-1)], F(-3)), ([F(-10**6), F(-10**6 + 1)], F(-2 * 10**6 + 1))]
    return LinearProgram([F(1), F(1)], [], rows)


def test_degenerate_wrong_active_set():
    lp = _degenerate_lp()
    ref = brute_force_max(lp)
    assert ref == 2 and simplex_solve(lp).objective == ref
    sol = float_presolve_and_rationalize(lp, tol=-1.0)  # no row is read as active
    assert sol.objective == ref and verify_certificate(lp, sol)


def test_degenerate_fallback(monkeypatch):
    import spheredual.lp as lpmod

    lp = _degenerate_lp()
    monkeypatch.setattr(lpmod, "_float_solve", lambda lp, tol=1e-9: None)
    sol = float_presolve_and_rationalize(lp)
    assert sol.method == "simplex-fallback"
    assert sol.objective == 2 and verify_certificate(lp, sol)


def test_cold_row_basis_simplex_matches(basis_k8_n4):
    for T in (1, 2, 3, 4):
        lp = build_dual_lp(basis_k8_n4, T)
        s = RowBasisSimplex(lp)
        sol = s.solve(s.initial_basis())
        assert sol.status == OPTIMAL and verify_certificate(lp, sol)
        assert sol.objective == simplex_solve(lp).objective


def test_echelon_coordinates_give_same_optimum(basis_k8_n4):
    lp = build_dual_lp(basis_k8_n4, 3)
    sol = solve_lp(lp, basis_k8_n4)
    assert sol.x == [F(1, 136), F(-121, 2176), F(1, 136), F(-60, 17), F(-60, 17)]
    R = echelon_transform(basis_k8_n4)
    assert simplex_solve(lp.transformed(R)).objective == 1


def test_brute_force_equivalence_500():
    rng = random.Random(20240917)
    checked = 0
    for _ in range(500):
        lp = random_bounded_lp(rng)
        ref = brute_force_max(lp)
        assert ref is not None
        for solve in (simplex_solve, float_presolve_and_rationalize):
            sol = solve(lp)
            assert sol.status == OPTIMAL
            assert sol.objective == ref
            assert verify_certificate(lp, sol)
        s = RowBasisSimplex(lp)
        cold = s.solve(s.initial_basis())
        assert cold.objective == ref
        checked += 1
    assert checked == 500


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.fractions(min_value=F(1, 50), max_value=50))
def test_scale_invariance(seed, lam):
    rng = random.Random(seed)
    lp = random_bounded_lp(rng)
    sol = simplex_solve(lp)
    if not lp.ge_rows:
        return
    i = rng.randrange(len(lp.ge_rows))
    row, rhs = lp.ge_rows[i]
    scaled = LinearProgram(
        lp.objective, lp.eq_rows, lp.ge_rows[:i] + [([lam * v for v in row], lam * rhs)] + lp.ge_rows[i + 1 :]
    )
    again = simplex_solve(scaled)
    assert again.objective == sol.objective
    if len(_optimal_vertices(lp, sol.objective)) == 1:
        assert again.x == sol.x


def _optimal_vertices(lp, best):
    n = lp.nvars
    rows = lp.rows
    out = set()
    for idx in itertools.combinations(range(len(rows)), n):
        x = solve_exact([rows[i][0] for i in idx], [rows[i][1] for i in idx])
        if x is None:
            continue
        dot = lambda r: sum(u * v for u, v in zip(r, x))
        if all(dot(r) == v for r, v in lp.eq_rows) and all(dot(r) >= v for r, v in lp.ge_rows) and dot(lp.objective) == best:
            out.add(tuple(x))
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_unbounded_when_objective_leaves_the_cone(seed):
    rng = random.Random(seed)
    # d.x >= 0 leaves the ray along d open, so max d.x is unbounded
    d = [F(rng.randint(-3, 3)) for _ in range(rng.randint(1, 6))]
    if not any(d):
        return
    rays = LinearProgram(d, [], [([v for v in d], F(0))])
    assert simplex_solve(rays).status == UNBOUNDED
