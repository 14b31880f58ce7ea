"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed live) or
as a script, ``python tests/test_acceptance.py``.  Level-24 rows take a few
minutes; level 96 is optional and skipped.
"""
import io
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lp_oracle import brute_force_max, random_bounded_lp  # noqa: E402
from spheredual.characters import generalized_bernoulli, l_value_at_one_minus_k, character_from_name, trivial_character  # noqa: E402
from spheredual.cli import main as cli_main  # noqa: E402
from spheredual.eigenforms import compute_eigen_data  # noqa: E402
from spheredual.linalg import rank  # noqa: E402
from spheredual.lp import RowBasisSimplex, build_dual_lp, float_presolve_and_rationalize, simplex_solve, verify_certificate  # noqa: E402
from spheredual.modspace import assemble_basis, dimension, sturm_bound  # noqa: E402
from spheredual.pipeline import RunConfig, compute_dual_bound, echelon_transform, pair_growth, report_from_machine  # noqa: E402
from spheredual.positivity import certify_nonnegative, form_coefficients  # noqa: E402
from spheredual.summation import summation_check  # noqa: E402

F = Fraction
SUMMATION_TOL = 1e-10
WIDTHS = [F(1, 2), F(1), F(2), F(3)]

# (d, T, expected 6-decimal value) at level 24
LEVEL24_ROWS = [(12, 4, "0.059781"), (16, 6, "0.103948"), (20, 9, "0.260996"), (28, 9, "4.591741"), (32, 12, "28.086665")]
RECORD_DENSITY = {12: F(1, 27), 16: F(1, 16)}
RATIO_FLOOR = {12: 1.61, 16: 1.66}

LEVEL4_X = {
    2: [F(1, 17), F(1, 17), F(0), F(-480, 17), F(0)],
    3: [F(1, 136), F(-121, 2176), F(1, 136), F(-60, 17), F(-60, 17)],
}

_cache = {}
_printer = [print]


def say(line):
    _printer[0](line)


def verdict(name, ok, detail):
    say(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


@pytest.fixture(autouse=True)
def _live_output(capsys):
    def emit(line):
        with capsys.disabled():
            print(line)

    _printer[0] = emit
    yield
    _printer[0] = print


def timed(fn, *a, **kw):
    t = time.time()
    out = fn(*a, **kw)
    return out, time.time() - t


def cli_bound(dim, level, T):
    buf = io.StringIO()
    code = cli_main(["bound", "--dim", str(dim), "--level", str(level), "--min-norm", str(T), "--output", "machine"], buf)
    return code, report_from_machine(buf.getvalue())


def space(k, N):
    key = ("basis", k, N)
    if key not in _cache:
        b = assemble_basis(k, N)
        _cache[key] = (b, compute_eigen_data(b))
    return _cache[key]


def small_reports():
    """Every bound reported by criteria 1 and 2."""
    if "small" not in _cache:
        out = {}
        for d, N, T in [(8, 1, 1), (24, 1, 2), (16, 4, 2), (16, 4, 3), (16, 4, 4)]:
            b, e = space(d // 2, N)
            out[(d, N, T)] = compute_dual_bound(RunConfig(d, N, T), b, e)
        _cache["small"] = out
    return _cache["small"]


def level24_reports():
    if "level24" not in _cache:
        out = {}
        for d, T, _ in LEVEL24_ROWS:
            (b, e), t_basis = timed(space, d // 2, 24)
            rep = compute_dual_bound(RunConfig(d, 24, T), b, e)
            out[(d, 24, T)] = (rep, t_basis + rep.seconds)
        _cache["level24"] = out
    return _cache["level24"]


def all_reports():
    reps = dict(small_reports())
    reps.update({key: rep for key, (rep, _) in level24_reports().items()})
    return reps


# ---------------------------------------------------------------- 1


def test_criterion_1_sharp_dimensions():
    rows = []
    ok = True
    for dim, T, want in [(8, 1, F(1, 16)), (24, 2, F(1))]:
        (code, rep), dt = timed(cli_bound, dim, 1, T)
        good = code == 0 and rep.bound == want and dt < 1.0
        ok = ok and good
        rows.append(f"d={dim} T={T} bound={rep.bound} ({dt:.2f}s)")
    assert verdict("criterion 1 (sharp dimensions, exact, <1 s)", ok, "; ".join(rows))


# ---------------------------------------------------------------- 2


def test_criterion_2_level_4():
    start = time.time()
    b, _ = space(8, 4)
    reps = {T: compute_dual_bound(RunConfig(16, 4, T), b) for T in (2, 3, 4)}
    g2 = b.combine(reps[2].x)
    g3 = b.combine(reps[3].x)
    g4 = b.combine(reps[4].x)
    checks = [
        g2.coeffs[:5] == (1, 0, 4320, 61440, 522720),
        reps[2].bound == F(1, 16),
        reps[3].x == LEVEL4_X[3],
        g3.coeffs[:6] == (1, 0, 0, 7680, 4320, 276480),
        reps[3].bound == F(3**8, 2**16),
        all(g4[2 * n] == g2[n] for n in range(b.order // 2 + 1)) and all(g4[n] == 0 for n in range(1, b.order + 1, 2)),
        reps[4].bound == F(1, 16),
    ]
    dt = time.time() - start
    ok = all(checks) and dt < 1.0
    detail = f"T=2 {reps[2].bound}, T=3 {reps[3].bound}, T=4 {reps[4].bound}; checks {sum(checks)}/{len(checks)} ({dt:.2f}s)"
    assert verdict("criterion 2 (level-4 worked example)", ok, detail)


# ---------------------------------------------------------------- 3


def test_criterion_3_level_24_table():
    reps = level24_reports()
    ok = True
    rows = []
    for d, T, want in LEVEL24_ROWS:
        rep, dt = reps[(d, 24, T)]
        good = rep.certified and rep.decimal == want
        ok = ok and good
        rows.append(f"d={d} T={T} {rep.decimal}{'' if good else ' (expected ' + want + ')'} {rep.status} {dt:.0f}s")
    assert verdict("criterion 3 (level-24 rows)", ok, "; ".join(rows))


# ---------------------------------------------------------------- 4


def test_criterion_4_separation_ratios():
    reps = level24_reports()
    ok = True
    rows = []
    for d, T, _ in LEVEL24_ROWS[:2]:
        rep, _ = reps[(d, 24, T)]
        ratio = rep.bound / RECORD_DENSITY[d]
        ok = ok and rep.certified and ratio > RATIO_FLOOR[d]
        rows.append(f"d={d} ratio={float(ratio):.4f} > {RATIO_FLOOR[d]}")
    assert verdict("criterion 4 (separation ratios, level 24)", ok, "; ".join(rows))


def test_criterion_4_level_96_optional():
    say("[SKIP] criterion 4 (level-96 ratios 1.686 and 1.7): optional; needs ingested level-96 basis files")
    pytest.skip("level-96 bases need ingested files; optional extended criterion")


# ---------------------------------------------------------------- 5


def test_criterion_5_every_bound_certified():
    rows = []
    ok = True
    for (d, N, T), rep in sorted(all_reports().items()):
        for name, c in (("g", rep.cert_g), ("g~", rep.cert_gt)):
            good = c is not None and c.certified and c.scanned_to >= c.Q
            ok = ok and good
            if c is not None and c.method != "plain":
                rows.append(f"d={d} N={N} T={T} {name} certified by {c.method}")
    detail = f"{2 * len(all_reports())} certificates; " + ("; ".join(rows) or "all plain")
    assert verdict("criterion 5a (both certificates for every reported bound)", ok, detail)


@pytest.mark.xfail(strict=True, reason="the level-4 T=2 g~ is the inconclusive example itself; see the decisions ledger")
def test_criterion_5_literal_uniform_floor():
    bad = []
    for (d, N, T), rep in sorted(all_reports().items()):
        b, e = space(d // 2, N)
        for name, coords in (("g", rep.x), ("g~", b.al_coordinates(rep.x))):
            c = certify_nonnegative(None, b, e, coords=coords)
            if not (c.certified and c.r_g > 0):
                bad.append(f"d={d} N={N} T={T} {name} r_g={c.r_g} zero classes {c.zero_classes}")
    ok = not bad
    verdict("criterion 5b (plain r_g > 0 for every g and g~)", ok, "; ".join(bad) or "all positive")
    assert ok


def test_criterion_5_counterexample():
    b, e = space(8, 4)
    gt = b.al_coordinates(LEVEL4_X[2])
    series = b.combine(gt)
    c = certify_nonnegative(None, b, e, coords=gt)
    ok = series.coeffs[:7] == (16, 0, 0, 0, 69120, 0, 983040) and not c.certified and c.zero_classes == [1, 3]
    detail = f"g~ = 16 + 69120q^4 + 983040q^6 + ...: {c.verdict}, zero-floor classes {c.zero_classes}"
    assert verdict("criterion 5c (counterexample inconclusive, odd classes at 0)", ok, detail)


def test_criterion_5_extended_scan_soundness():
    rng = random.Random(5)
    b, e = space(8, 4)
    checked = 0
    ok = True
    samples = [rep.x for rep in small_reports().values() if rep.N == 4]
    samples += [[F(rng.randint(0, 20), 7) for _ in range(3)] + [F(rng.randint(-40, 40), 9) for _ in range(2)] for _ in range(60)]
    for x in samples:
        for coords in (x, b.al_coordinates(x)):
            c = certify_nonnegative(None, b, e, coords=coords)
            if c.certified:
                checked += 1
                ok = ok and min(form_coefficients(coords, b, c.scanned_to + 50)) >= 0
    for (d, N, T), rep in sorted(all_reports().items()):
        bb, _ = space(d // 2, N)
        for coords, c in ((rep.x, rep.cert_g), (bb.al_coordinates(rep.x), rep.cert_gt)):
            checked += 1
            ok = ok and min(form_coefficients(coords, bb, c.scanned_to + 50)) >= 0
    assert verdict("criterion 5d (no certified verdict contradicted by +50 scan)", ok, f"{checked} certified forms rescanned")


# ---------------------------------------------------------------- 6


def test_criterion_6_summation():
    start = time.time()
    rows = []
    worst = 0.0
    ok = True
    for k, N in [(4, 1), (8, 4)]:
        b, e = space(k, N)
        b200 = b.extended(200)
        for j in range(b.dim):
            x = [F(int(i == j)) for i in range(b.dim)]
            res = summation_check(
                b200.combine(x), b200.combine_al(x), N, 2 * k, WIDTHS, 200, growth=pair_growth(x, b200, e)
            )
            total = float(res.max_total)
            worst = max(worst, total)
            ok = ok and res.passed and not res.heuristic and total <= SUMMATION_TOL
            rows.append(f"{b.labels[j]}@N={N}")
    dt = time.time() - start
    detail = f"{len(rows)} pairs x {len(WIDTHS)} widths, max discrepancy+tail {worst:.2e} ({dt:.1f}s)"
    assert verdict("criterion 6 (summation identity)", ok, detail)


# ---------------------------------------------------------------- 7


def test_criterion_7_random_lps():
    rng = random.Random(7)
    ok = True
    for _ in range(500):
        lp = random_bounded_lp(rng)
        sol = simplex_solve(lp)
        ok = ok and sol.objective == brute_force_max(lp) and verify_certificate(lp, sol)
    assert verdict("criterion 7a (500 random LPs vs vertex enumeration)", ok, "500 instances")


def test_criterion_7_pipeline_lps():
    rows = []
    ok = True
    keys = sorted(all_reports())
    for d, N, T in keys:
        b, _ = space(d // 2, N)
        lp = build_dual_lp(b, T).transformed(echelon_transform(b))
        fast = float_presolve_and_rationalize(lp)
        if N == 24:
            solver = RowBasisSimplex(lp)
            (pure, dt) = timed(solver.solve, solver.initial_basis())
            how = f"row-basis cold {pure.pivots} pivots {dt:.0f}s"
        else:
            pure, dt = timed(simplex_solve, lp)
            how = "tableau"
        good = verify_certificate(lp, fast) and verify_certificate(lp, pure) and fast.objective == pure.objective
        ok = ok and good
        rows.append(f"d={d} N={N} T={T} {'agree' if good else 'DISAGREE'} ({how})")
    assert verdict("criterion 7b (pipeline LPs: certificates, presolve == pure simplex)", ok, "; ".join(rows))


# ---------------------------------------------------------------- 8


def _w_squared_is_identity(w):
    d = len(w)
    return all(sum(w[i][l] * w[l][j] for l in range(d)) == (i == j) for i in range(d) for j in range(d))


def test_criterion_8_structure():
    spaces = [(4, 1), (12, 1), (8, 4)] + [(d // 2, 24) for d, _, _ in LEVEL24_ROWS]
    ok = True
    for k, N in spaces:
        b, _ = space(k, N)
        L = sturm_bound(k, N)
        ok = ok and _w_squared_is_identity(b.al_matrix)
        ok = ok and b.dim == dimension(k, N) == rank([s.coeffs[: L + 1] for s in b.series])
    one, chi4 = trivial_character(), character_from_name("chi-4")
    units = [
        dimension(8, 4) == 5,
        l_value_at_one_minus_k(4, one) == F(1, 120),
        l_value_at_one_minus_k(8, one) == F(1, 240),
        generalized_bernoulli(3, chi4) == F(3, 2),
    ]
    ok = ok and all(units)
    detail = f"W^2 = I and rank = dim on {len(spaces)} spaces; dim M_8(4) = 5; zeta(-3), zeta(-7), B_3,chi4 exact"
    assert verdict("criterion 8 (structural invariants)", ok, detail)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rA"]))
