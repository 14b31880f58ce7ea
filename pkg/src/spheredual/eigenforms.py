"""Cuspidal Hecke eigenforms of M_k(Gamma0(N)) with rigorous coefficient enclosures.

The set B_k(N) consists of h(dz) for every newform h of level M | N and
every d | N/M.  It is computed from a SpaceBasis alone: a Hecke operator T_p
(p not dividing N) is represented on the cusp coordinates, its exact
characteristic polynomial is factored over Q, the h(Dz) orbit (D = N/M) is
picked out by its support on multiples of D, and the Atkin-Lehner matrix
carries it to the orbit of h.  Coefficients of a newform lie in a totally
real field Q(alpha); they are kept as polynomials in alpha and enclosed by
evaluating on rational isolating intervals of the real roots.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import sympy
from gmpy2 import mpq

from .arith import divisors, sigma
from .intervals import DEFAULT_BITS, Interval, horner
from .linalg import EchelonSpace, NotInSpan, charpoly, nullspace, q
from .modspace import SpaceBasis, parse_eisenstein_label, sturm_bound

log = logging.getLogger(__name__)


class EigenDataError(ValueError):
    pass


@dataclass
class EigenEntry:
    """One element h(dz) of B_k(N); ``coeffs[n-1]`` encloses its n-th coefficient."""

    label: str
    coeffs: list[Interval]

    @property
    def exact(self) -> bool:
        return all(c.is_point for c in self.coeffs)


@dataclass
class EigenformData:
    level: int
    weight: int
    order: int
    entries: list[EigenEntry] = field(default_factory=list)
    source: str = "computed"

    def __post_init__(self):
        for e in self.entries:
            if len(e.coeffs) != self.order:
                raise EigenDataError(f"{e.label}: {len(e.coeffs)} coefficients, expected {self.order}")

    def check(self) -> None:
        """Deligne bound |c_n| <= sigma_0(n) n^((k-1)/2) and leading coefficient 1."""
        k = self.weight
        for e in self.entries:
            lead = next((c for c in e.coeffs if not (c.is_point and c.lo == 0)), None)
            if lead is None or not lead.contains(1):
                raise EigenDataError(f"{e.label}: leading coefficient does not contain 1")
            for n, c in enumerate(e.coeffs, start=1):
                # lower end of |c_n| exceeding the bound is a definite violation
                if c.mig ** 2 > mpq(sigma(n, 0) ** 2 * n ** (k - 1)):
                    raise EigenDataError(f"{e.label}: |c_{n}| violates the Deligne bound")


# ---------------------------------------------------------------- files


def save_eigen(data: EigenformData, path: str | Path) -> None:
    lines = [f"EIGEN v1 k={data.weight} N={data.level} count={len(data.entries)} M={data.order}"]
    for e in data.entries:
        lines.append(f"H {e.label}")
        lines.append(" ".join(c.render() for c in e.coeffs))
    Path(path).write_text("\n".join(lines) + "\n")


def load_eigen(path: str | Path) -> EigenformData:
    import re

    raw = Path(path).read_text().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise EigenDataError("empty eigenform file")
    m = re.match(r"^EIGEN v1 k=(\d+) N=(\d+) count=(\d+) M=(\d+)$", lines[0][1])
    if not m:
        raise EigenDataError(f"line {lines[0][0]}: bad header")
    k, N, count, M = map(int, m.groups())
    if len(lines) != 1 + 2 * count:
        raise EigenDataError(f"expected {count} entries, file has {(len(lines) - 1) / 2}")
    entries = []
    for j in range(count):
        ln, head = lines[1 + 2 * j]
        if not head.startswith("H "):
            raise EigenDataError(f"line {ln}: expected 'H <label>'")
        ln, body = lines[2 + 2 * j]
        try:
            coeffs = [Interval.parse(tok) for tok in body.split()]
        except (ValueError, ZeroDivisionError) as exc:
            raise EigenDataError(f"line {ln}: {exc}") from exc
        if len(coeffs) != M:
            raise EigenDataError(f"line {ln}: {len(coeffs)} intervals, header says M={M}")
        entries.append(EigenEntry(head[2:].strip(), coeffs))
    data = EigenformData(N, k, M, entries, source=str(path))
    data.check()
    return data


# ---------------------------------------------------------------- polynomial helpers
# polynomials are lists of mpq, lowest degree first; elements of Q(alpha) are
# reduced modulo the monic minimal polynomial P


def _trim(p):
    while p and p[-1] == 0:
        p = p[:-1]
    return p


def _pmod(a, P):
    a = list(a)
    e = len(P) - 1
    for i in range(len(a) - 1, e - 1, -1):
        c = a[i]
        if c:
            for j in range(e + 1):
                a[i - e + j] -= c * P[j]
    return _trim(a[:e])


def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def _pscale(c, a):
    return [c * x for x in a]


def _pmul(a, b, P):
    if not a or not b:
        return []
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pmod(out, P)


# ---------------------------------------------------------------- Hecke data


def cusp_indices(basis: SpaceBasis) -> list[int]:
    return [j for j, lab in enumerate(basis.labels) if parse_eisenstein_label(lab, basis.level) is None]


def _small_primes_not_dividing(N: int, count: int) -> list[int]:
    out, p = [], 2
    while len(out) < count:
        if N % p and sympy.isprime(p):
            out.append(p)
        p += 1
    return out


def hecke_matrix(series: list[list], k: int, p: int, L: int, space: EchelonSpace) -> list[list[mpq]]:
    """Matrix of T_p on the span of ``series`` (columns = images), using indices 0..L."""
    cols = []
    pk = mpq(p) ** (k - 1)
    for s in series:
        img = [s[p * n] + (pk * s[n // p] if n % p == 0 else 0) for n in range(L + 1)]
        try:
            cols.append(space.coords(img))
        except NotInSpan as exc:
            raise EigenDataError("T_p image left the cusp space; basis order too small?") from exc
    d = len(series)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def _matpoly(P, A):
    """P(A) for a rational polynomial P and square A."""
    d = len(A)
    out = [[mpq(0)] * d for _ in range(d)]
    for c in reversed(P):
        out = [[sum((out[i][l] * A[l][j] for l in range(d) if out[i][l] and A[l][j]), mpq(0)) for j in range(d)] for i in range(d)]
        for i in range(d):
            out[i][i] += c
    return out


def _refine_roots(P: list[mpq], bits: int) -> list[Interval]:
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(int(c.numerator), int(c.denominator)) for c in reversed(P)], x)
    out = []
    for (a, b), mult in poly.intervals():
        lo, hi = mpq(int(a.p), int(a.q)), mpq(int(b.p), int(b.q))
        ev = lambda t: sum((c * t**i for i, c in enumerate(P)), mpq(0))
        if lo == hi or ev(lo) == 0:
            out.append(Interval(lo, lo))
            continue
        if ev(hi) == 0:
            out.append(Interval(hi, hi))
            continue
        slo = ev(lo) > 0
        target = mpq(1, 2**bits) * max(1, abs(lo), abs(hi))
        while hi - lo > target:
            mid = (lo + hi) / 2
            v = ev(mid)
            if v == 0:
                lo = hi = mid
                break
            if (v > 0) == slo:
                lo = mid
            else:
                hi = mid
        out.append(Interval(lo, hi))
    if len(out) != len(P) - 1:
        raise EigenDataError("Hecke polynomial is not totally real")
    return out


@dataclass
class _Orbit:
    poly: list[mpq]  # monic minimal polynomial of alpha
    D: int  # N / (level of the newform)
    coeff_polys: list[list[mpq]]  # a_n(h_alpha) as polynomials in alpha, n = 0..order (unnormalized)


def compute_eigen_data(basis: SpaceBasis, bits: int = DEFAULT_BITS, order: int | None = None) -> EigenformData:
    """B_k(N) with enclosures of c_n for n = 1..order (default: the Sturm bound)."""
    k, N = basis.weight, basis.level
    L = sturm_bound(k, N)
    order = order if order is not None else L
    cusp = cusp_indices(basis)
    if not cusp:
        return EigenformData(N, k, order, [], "computed")
    primes = _small_primes_not_dividing(N, 3)
    need = max(primes[-1] * L, order)
    full = basis.extended(need) if basis.order < need else basis
    series = [full.forms[j].series.coeffs for j in cusp]
    space = EchelonSpace(L + 1)
    for s in series:
        if not space.add(s[: L + 1]):
            raise EigenDataError("cusp forms are dependent up to the Sturm bound")
    hecke = {p: hecke_matrix(series, k, p, L, space) for p in primes}
    d = len(cusp)
    # AL matrix restricted to the cusp coordinates
    W = [[full.al_matrix[i][j] for j in cusp] for i in cusp]
    for weights in ([1, 0, 0], [1, 1, 0], [1, 2, 3]):
        A = [[sum(w * q(hecke[p][i][j]) for w, p in zip(weights, primes)) for j in range(d)] for i in range(d)]
        try:
            orbits = _orbits(A, W, series, N, L, full.order, order)
            break
        except EigenDataError as exc:
            log.info("Hecke combination %s did not separate newforms: %s", weights, exc)
    else:
        raise EigenDataError("could not separate the newform orbits")
    entries = []
    for oi, orb in enumerate(orbits):
        roots = _refine_roots(orb.poly, bits + 64)
        for ri, alpha in enumerate(roots):
            vals = [horner(p, alpha, bits) for p in orb.coeff_polys[: order + 1]]
            a1 = vals[1]
            if a1.contains_zero():
                raise EigenDataError("a_1 enclosure contains zero; raise precision")
            an = [v / a1 if not (v.is_point and a1.is_point) else Interval.point(v.lo / a1.lo) for v in vals]
            an = [c if c.is_point else c.rounded(bits) for c in an]
            M = N // orb.D
            for dd in divisors(orb.D):
                coeffs = [an[n // dd] if n % dd == 0 else Interval.point(mpq(0)) for n in range(1, order + 1)]
                entries.append(EigenEntry(f"N{M}.o{oi}.e{ri}.d{dd}", coeffs))
    if len(entries) != d:
        raise EigenDataError(f"found {len(entries)} eigenforms for a {d}-dimensional cusp space")
    data = EigenformData(N, k, order, entries, "computed")
    data.check()
    return data


def _orbits(A, W, series, N, L, avail, order) -> list[_Orbit]:
    d = len(A)
    cp = charpoly(A)
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(int(c.numerator), int(c.denominator)) for c in reversed(cp)], x)
    _, factors = poly.factor_list()
    out = []
    total = 0
    for fac, mult in factors:
        coeffs = fac.monic().all_coeffs()[::-1]
        P = [mpq(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in coeffs]
        e = len(P) - 1
        V = nullspace(_matpoly(P, A), d)
        if len(V) != e * mult:
            raise EigenDataError("Hecke operator is not semisimple on this factor")
        orbit_basis, D = _support_orbit(V, series, N, L, e, mult)
        # A restricted to the orbit span, in orbit-basis coordinates
        osp = EchelonSpace(d)
        for v in orbit_basis:
            osp.add(v)
        Aw_cols = []
        for v in orbit_basis:
            Av = [sum((A[i][j] * v[j] for j in range(d) if v[j]), mpq(0)) for i in range(d)]
            Aw_cols.append(osp.coords(Av))
        Aw = [[Aw_cols[j][i] for j in range(e)] for i in range(e)]
        vec = _eigenvector(P, Aw)
        # h_alpha(Dz) in cusp coordinates, then the newform via the AL matrix
        coords = [[] for _ in range(d)]
        for m, pm in enumerate(vec):
            for i in range(d):
                if orbit_basis[m][i]:
                    coords[i] = _padd(coords[i], _pscale(orbit_basis[m][i], pm))
        if D > 1:
            coords = [
                _trim([sum((W[i][j] * (coords[j][t] if t < len(coords[j]) else 0) for j in range(d)), mpq(0)) for t in range(e)])
                for i in range(d)
            ]
        polys = []
        for n in range(min(order, avail) + 1):
            acc = []
            for i in range(d):
                c = series[i][n]
                if c and coords[i]:
                    acc = _padd(acc, _pscale(q(c), coords[i]))
            polys.append(_trim(acc))
        if not polys[1]:
            raise EigenDataError("newform image has vanishing a_1")
        # a newform's T_p eigenvalue relation: spot-check a_1 a_p = a_p a_1 trivially; check support
        out.append(_Orbit(P, D, polys))
        total += e * mult
    if total != d:
        raise EigenDataError("factor dimensions do not add up")
    return out


def _support_orbit(V, series, N, L, e, mult):
    """The e-dimensional part of span(V) supported on multiples of D, with sigma_0(D) = mult."""
    d = len(series)
    for D in sorted(divisors(N), reverse=True):
        if sigma(D, 0) != mult:
            continue
        rows = []
        for n in range(1, L + 1):
            if n % D:
                rows.append([sum((q(series[i][n]) * v[i] for i in range(d) if v[i]), mpq(0)) for v in V])
        ker = nullspace(rows, len(V)) if rows else [[mpq(1) if i == j else mpq(0) for i in range(len(V))] for j in range(len(V))]
        if len(ker) == e:
            return [[sum((t[j] * V[j][i] for j in range(len(V)) if t[j]), mpq(0)) for i in range(d)] for t in ker], D
    raise EigenDataError("no divisor D isolates the h(Dz) orbit")


def _eigenvector(P, Aw):
    """A nonzero v(alpha) with Aw v = alpha v, entries polynomials in alpha."""
    e = len(P) - 1
    # P(x) = (x - alpha) Q(x); q_{e-1} = 1, q_{j-1} = P_j + alpha q_j
    qs = [None] * e
    qs[e - 1] = [mpq(1)]
    for j in range(e - 1, 0, -1):
        qs[j - 1] = _padd([P[j]], [mpq(0)] + qs[j])
    for c in range(e):
        col = [mpq(1) if i == c else mpq(0) for i in range(e)]
        vec = [[] for _ in range(e)]
        for j in range(e):
            for i in range(e):
                if col[i]:
                    vec[i] = _padd(vec[i], _pscale(col[i], qs[j]))
            col = [sum((Aw[i][l] * col[l] for l in range(e) if col[l]), mpq(0)) for i in range(e)]
        vec = [_pmod(v, P) for v in vec]
        if any(vec):
            # verify Aw v = alpha v in Q(alpha)
            for i in range(e):
                lhs = []
                for l in range(e):
                    if Aw[i][l]:
                        lhs = _padd(lhs, _pscale(Aw[i][l], vec[l]))
                rhs = _pmul([mpq(0), mpq(1)], vec[i], P) if vec[i] else []
                if _trim(_pmod(_padd(lhs, _pscale(-1, rhs)), P)):
                    raise EigenDataError("eigenvector check failed")
            return vec
    raise EigenDataError("no eigenvector column")
