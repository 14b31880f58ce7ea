"""Certificates that every q-coefficient of a form in M_k(Gamma0(N)) is nonnegative.

Write g = g_e + g_c (Eisenstein plus cuspidal).  Deligne's bound on the
eigenforms gives |c_n| <= sqrt(3) C_g n^{k/2} (using sigma_0(n) <= sqrt(3n)),
the explicit Eisenstein formulas give e_n >= r_g n^{k-1}, so a_n > 0 once
n^{k-2} > 3 (C_g / r_g)^2 and the remaining coefficients are scanned.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath
from gmpy2 import mpq

from .arith import sigma
from .characters import EisensteinLabel
from .eigenforms import EigenformData, EigenEntry, compute_eigen_data
from .intervals import Interval, _ceil_dyadic
from .linalg import EchelonSpace, NotInSpan, q, solve_square, to_fraction
from .modspace import SpaceBasis, parse_eisenstein_label
from .qseries import QSeries, linear_combination

log = logging.getLogger(__name__)

CERTIFIED, INCONCLUSIVE = "certified", "inconclusive"
SLACK = Fraction(1) + Fraction(1, 2**20)
# sigma_0(n)^2 <= 3 n for every n >= 1 (equality at n = 12)
DIVISOR_CONSTANT = 3
MAX_SCAN = 400_000


class IndecisiveEnclosure(ArithmeticError):
    pass


@dataclass
class SplitParts:
    y: list[tuple[EisensteinLabel, Fraction]]  # coordinates on the E^phi_t
    g_e: QSeries
    g_c: QSeries
    coords: list[Fraction]  # coordinates of g in the basis


@dataclass
class PositivityCertificate:
    C_g: Fraction | None
    r_g: Fraction | None
    Q: int | None
    scanned_to: int
    verdict: str
    reason: str = ""
    zero_classes: list[int] = field(default_factory=list)
    method: str = "plain"  # or "residue-refined"

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED


def _eisenstein_scale(lab: EisensteinLabel) -> Fraction:
    """Basis form = scale * E^phi_t (see the modspace normalization)."""
    if lab.character.is_trivial:
        return Fraction(lab.t) ** (lab.weight // 2) / lab.constant_term()
    return Fraction(1)


def split_parts(g: QSeries | None, basis: SpaceBasis, coords: Sequence | None = None) -> SplitParts:
    """Exact Eisenstein coordinates y^phi_t of g and its cuspidal remainder."""
    if coords is None:
        if g is None:
            raise ValueError("need g or its coordinates")
        coords = basis.coordinates(g)
        if basis.combine(coords) != g.truncate(basis.order):
            raise NotInSpan("form is not in the span of the basis")
    coords = [Fraction(c) for c in coords]
    y = []
    eis_idx = []
    for j, lab in enumerate(basis.labels):
        e = parse_eisenstein_label(lab, basis.level)
        if e is not None:
            y.append((e, coords[j] * _eisenstein_scale(e)))
            eis_idx.append(j)
    ce = [coords[j] if j in eis_idx else Fraction(0) for j in range(basis.dim)]
    cc = [Fraction(0) if j in eis_idx else coords[j] for j in range(basis.dim)]
    return SplitParts(y, basis.combine(ce), basis.combine(cc), coords)


# ---------------------------------------------------------------- step 1: C_g


def cusp_bound_Cg(g_c: QSeries, eigen: EigenformData, bits: int = 256) -> Fraction:
    """Rational upper bound for sum_h |x_h| where g_c = sum_h x_h h over B_k(N)."""
    M = min(eigen.order, g_c.order)
    b = [q(g_c[n]) for n in range(1, M + 1)]
    if not any(b):
        return Fraction(0)
    ents = eigen.entries
    m = len(ents)
    if m == 0:
        raise NotInSpan("nonzero cusp part but no eigenforms")
    A = [[ents[h].coeffs[n] for h in range(m)] for n in range(M)]
    exact = all(c.is_point for h in ents for c in h.coeffs[:M])
    rows = _independent_rows(A, m, None if exact else bits)
    if len(rows) < m:
        raise IndecisiveEnclosure("eigenform enclosures do not determine a nonsingular system")
    if exact:
        x = solve_square([[A[n][h].lo for h in range(m)] for n in rows], [b[n] for n in rows])
        for n in range(M):
            if sum((A[n][h].lo * x[h] for h in range(m)), mpq(0)) != b[n]:
                raise NotInSpan("cusp part is not a combination of the eigenforms")
        return to_fraction(sum((abs(v) for v in x), mpq(0)))
    return _krawczyk_bound(A, b, rows, bits)


def _independent_rows(A, m: int, bits: int | None) -> list[int]:
    """First m rows of A that are independent.

    Exact elimination for point data; otherwise Gram-Schmidt on midpoints,
    accepting a row only if its relative residual exceeds 2^(-bits/2), so
    rows that are independent merely through enclosure noise are skipped.
    """
    if bits is None:
        sp = EchelonSpace(m)
        return [n for n in range(len(A)) if sp.add([c.lo for c in A[n]])][:m]
    rows, ortho = [], []
    with mpmath.workprec(2 * bits + 64):
        tol = mpmath.mpf(2) ** (-(bits // 2))
        for n, row in enumerate(A):
            v = [mpmath.mpf(int(c.mid.numerator)) / int(c.mid.denominator) for c in row]
            size = mpmath.sqrt(mpmath.fsum(t * t for t in v))
            if size == 0:
                continue
            for u in ortho:
                d = mpmath.fdot(v, u)
                v = [a - d * b for a, b in zip(v, u)]
            rest = mpmath.sqrt(mpmath.fsum(t * t for t in v))
            if rest > tol * size:
                ortho.append([t / rest for t in v])
                rows.append(n)
                if len(rows) == m:
                    break
    return rows


def _krawczyk_bound(A, b, rows, bits) -> Fraction:
    m = len(rows)
    sub = [A[n] for n in rows]
    with mpmath.workprec(2 * bits + 64):
        mid = mpmath.matrix([[mpmath.mpf(int(c.mid.numerator)) / int(c.mid.denominator) for c in row] for row in sub])
        Rm = mid**-1
        R = [[_mpf_to_mpq(Rm[i, j]) for j in range(m)] for i in range(m)]
    xt = [sum((R[i][j] * b[rows[j]] for j in range(m)), mpq(0)) for i in range(m)]
    xt = [_ceil_dyadic(v, bits) if v else v for v in xt]
    # E = I - R [A]
    norm = mpq(0)
    for i in range(m):
        acc = mpq(0)
        for j in range(m):
            e = Interval.point(mpq(1) if i == j else mpq(0))
            for l in range(m):
                if R[i][l] and not (sub[l][j].is_point and sub[l][j].lo == 0):
                    e = e - sub[l][j] * R[i][l]
            acc += e.mag
        norm = max(norm, acc)
    if norm >= 1:
        raise IndecisiveEnclosure(f"contraction test failed (||I - R A|| = {float(norm):.3g})")
    resid = []
    for l in range(m):
        r = Interval.point(b[rows[l]])
        for h in range(m):
            if xt[h]:
                r = r - sub[l][h] * xt[h]
        resid.append(r)
    rn = max(sum((R[i][l] * resid[l] for l in range(m) if R[i][l]), Interval.point(mpq(0))).mag for i in range(m))
    delta = rn / (1 - norm)
    # consistency on the remaining indices
    for n in range(len(A)):
        if n in rows:
            continue
        acc = Interval.point(mpq(0))
        for h in range(m):
            c = A[n][h]
            if c.is_point and c.lo == 0:
                continue
            acc = acc + c * Interval(xt[h] - delta, xt[h] + delta)
        if not acc.contains(b[n]):
            raise NotInSpan(f"cusp part disagrees with the eigenform span at q^{n + 1}")
    total = sum((abs(v) for v in xt), mpq(0)) + m * delta
    return Fraction(_ceil_dyadic(mpq(total) * q(SLACK), bits))


def _mpf_to_mpq(x) -> mpq:
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    v = mpq(int(man) << exp) if exp >= 0 else mpq(int(man), 1 << -exp)
    return -v if sign else v


# ---------------------------------------------------------------- step 2: r_g


def _norm_y(y) -> list[tuple[EisensteinLabel, Fraction]]:
    if isinstance(y, Mapping):
        return [(lab, Fraction(v)) for lab, v in y.items()]
    return [(lab, Fraction(v)) for lab, v in y]


def _floor_at(y, k: int, n: int) -> Fraction:
    by_t: dict[int, Fraction] = {}
    for lab, v in y:
        if n % lab.t == 0 and v:
            by_t[lab.t] = by_t.get(lab.t, Fraction(0)) + v * lab.character(n // lab.t)
    out = Fraction(0)
    for t, s in by_t.items():
        if s < 0:
            out += s / Fraction(t) ** (k - 1)
        elif s > 0:
            out += s / sigma(t, k - 1)
    return out


def residue_refined_floor(y, k: int, N: int) -> dict[int, Fraction]:
    """r_g(n) for each residue class n mod N (keys 0..N-1); e_n >= sigma_{k-1}(n) r_g(n)."""
    y = _norm_y(y)
    return {n % N: _floor_at(y, k, n) for n in range(1, N + 1)}


def eisenstein_floor_rg(y, k: int, N: int) -> Fraction:
    return min(residue_refined_floor(y, k, N).values())


def zero_floor_classes(y, k: int, N: int) -> list[int]:
    return sorted(c for c, v in residue_refined_floor(y, k, N).items() if v <= 0)


# ---------------------------------------------------------------- step 3: Q


def threshold_Q(C_g, r_g, k: int, factor: int = 1) -> int:
    """Largest m >= 0 with m^(k-2) <= factor * (C_g / r_g)^2, by exact binary search.

    With factor 1 this is floor((C_g / r_g)^(2/(k-2))).
    """
    C_g, r_g = Fraction(C_g), Fraction(r_g)
    if r_g <= 0:
        raise ValueError("inconclusive: r_g <= 0")
    if k <= 2:
        raise ValueError("need k > 2")
    if C_g == 0:
        return 0
    X2 = factor * (C_g / r_g) ** 2
    e = k - 2
    lo, hi = 0, 1
    while Fraction(hi) ** e <= X2:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if Fraction(mid) ** e <= X2:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------- step 4


def growth_constant(parts: SplitParts, C_g: Fraction) -> Fraction:
    """A with |a_n| <= A n^(k-1) for n >= 1 (sigma_{k-1}(m) <= 2 m^(k-1), sqrt 3 < 2)."""
    return 2 * sum((abs(v) for _, v in parts.y), Fraction(0)) + 2 * C_g


def certify_nonnegative(
    g: QSeries | None,
    basis: SpaceBasis,
    eigen: EigenformData | None = None,
    extra_scan: int = 0,
    coords: Sequence | None = None,
    max_scan: int = MAX_SCAN,
) -> PositivityCertificate:
    """Run the four steps; ``certified`` only when every step succeeds."""
    k, N = basis.weight, basis.level
    parts = split_parts(g, basis, coords)
    zero = zero_floor_classes(parts.y, k, N)
    r_g = eisenstein_floor_rg(parts.y, k, N)
    if r_g <= 0:
        return PositivityCertificate(None, r_g, None, 0, INCONCLUSIVE, "Eisenstein floor r_g <= 0", zero)
    if eigen is None:
        eigen = compute_eigen_data(basis)
    try:
        C_g = cusp_bound_Cg(parts.g_c, eigen)
    except (IndecisiveEnclosure, NotInSpan) as exc:
        return PositivityCertificate(None, r_g, None, 0, INCONCLUSIVE, f"cusp bound: {exc}", zero)
    Q = threshold_Q(C_g, r_g, k, DIVISOR_CONSTANT)
    scan = max(Q, extra_scan)
    if scan > max_scan:
        return PositivityCertificate(C_g, r_g, Q, 0, INCONCLUSIVE, f"threshold Q={Q} exceeds scan limit", zero)
    coeffs = form_coefficients(parts.coords, basis, scan)
    for n in range(scan + 1):
        if coeffs[n] < 0:
            return PositivityCertificate(C_g, r_g, Q, n, INCONCLUSIVE, f"a_{n} = {coeffs[n]} < 0", zero)
    return PositivityCertificate(C_g, r_g, Q, scan, CERTIFIED, "", zero)


def form_coefficients(coords: Sequence, basis: SpaceBasis, order: int) -> list[Fraction]:
    """Coefficients a_0..a_order of sum_j coords[j] g^j (regenerating the basis if needed)."""
    series = basis.series_to(max(order, 0))
    return list(linear_combination(coords, series).coeffs[: order + 1])


def certify_residue_refined(
    g: QSeries | None,
    basis: SpaceBasis,
    eigen: EigenformData | None = None,
    extra_scan: int = 0,
    coords: Sequence | None = None,
    max_scan: int = MAX_SCAN,
) -> PositivityCertificate:
    """Per-class variant for forms whose Eisenstein floor vanishes on some classes mod N.

    The vanishing argument is support containment: with exact eigenform data
    the cusp part is written on B_k(N), and every h(dz) carrying a nonzero
    coefficient must have d dividing no flagged class.  On flagged classes
    a_n = e_n >= 0; elsewhere the usual bound runs with the smallest
    positive class floor.
    """
    cert = _residue_refined(g, basis, eigen, extra_scan, coords, max_scan)
    cert.method = "residue-refined"
    return cert


def _residue_refined(g, basis, eigen, extra_scan, coords, max_scan) -> PositivityCertificate:
    k, N = basis.weight, basis.level
    parts = split_parts(g, basis, coords)
    floors = residue_refined_floor(parts.y, k, N)
    zero = sorted(c for c, v in floors.items() if v == 0)
    if any(v < 0 for v in floors.values()):
        return PositivityCertificate(None, min(floors.values()), None, 0, INCONCLUSIVE, "negative class floor", zero)
    positive = [v for v in floors.values() if v > 0]
    if not positive:
        return PositivityCertificate(None, Fraction(0), None, 0, INCONCLUSIVE, "no class with positive floor", zero)
    r_plus = min(positive)
    if eigen is None:
        eigen = compute_eigen_data(basis)
    M = min(eigen.order, parts.g_c.order)
    if zero and not parts.g_c.is_zero():
        ents = eigen.entries
        if not all(e.exact for e in ents):
            return PositivityCertificate(None, r_plus, None, 0, INCONCLUSIVE, "vanishing argument needs exact eigenforms", zero)
        x = _exact_eigen_coordinates(parts.g_c, ents, M)
        for e, xh in zip(ents, x):
            if xh == 0:
                continue
            d = next(n for n, c in enumerate(e.coeffs, start=1) if c.lo != 0)
            if any(c % d == 0 for c in zero):
                return PositivityCertificate(None, r_plus, None, 0, INCONCLUSIVE, f"cusp part does not vanish on flagged classes ({e.label})", zero)
    C_g = cusp_bound_Cg(parts.g_c, eigen)
    Q = threshold_Q(C_g, r_plus, k, DIVISOR_CONSTANT)
    scan = max(Q, extra_scan)
    if scan > max_scan:
        return PositivityCertificate(C_g, r_plus, Q, 0, INCONCLUSIVE, f"threshold Q={Q} exceeds scan limit", zero)
    coeffs = form_coefficients(parts.coords, basis, scan)
    for n in range(scan + 1):
        if coeffs[n] < 0:
            return PositivityCertificate(C_g, r_plus, Q, n, INCONCLUSIVE, f"a_{n} = {coeffs[n]} < 0", zero)
    return PositivityCertificate(C_g, r_plus, Q, scan, CERTIFIED, "", zero)


def _exact_eigen_coordinates(g_c: QSeries, ents: list[EigenEntry], M: int) -> list[Fraction]:
    m = len(ents)
    sp = EchelonSpace(m)
    rows = []
    for n in range(M):
        if sp.add([e.coeffs[n].lo for e in ents]):
            rows.append(n)
    if len(rows) < m:
        raise IndecisiveEnclosure("eigenforms are dependent on the available coefficients")
    x = solve_square([[ents[h].coeffs[n].lo for h in range(m)] for n in rows], [q(g_c[n + 1]) for n in rows])
    for n in range(M):
        if sum((ents[h].coeffs[n].lo * x[h] for h in range(m)), mpq(0)) != q(g_c[n + 1]):
            raise NotInSpan("cusp part is not a combination of the eigenforms")
    return [to_fraction(v) for v in x]
