"""Rational bases of M_k(Gamma0(N)) together with their Atkin-Lehner matrices.

Forms come from three sources: the Eisenstein series of
:mod:`spheredual.characters`, holomorphic eta quotients (whose image under
``g -> i^k g|_k w_N`` is again an eta quotient times an explicit rational),
and ingested basis files.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from pathlib import Path
from typing import Iterable, Sequence

import flint

from .arith import divisors, euler_phi, exact_sqrt, prime_factors
from .characters import (
    EisensteinLabel,
    LevelRestrictionError,
    UnsupportedWeight,
    character_from_name,
    eisenstein_labels,
    eisenstein_qexp,
)
from .linalg import EchelonSpace, NotInSpan, inverse, q, to_fraction
from .qseries import QSeries, format_rat, linear_combination, parse_series, render_series

log = logging.getLogger(__name__)


class IncompleteBasis(RuntimeError):
    pass


class MissingAtkinLehner(RuntimeError):
    pass


class DeferToIngestion(ValueError):
    """No exact Atkin-Lehner rule is available; the image must come from a file."""


class BasisFileError(ValueError):
    pass


# ---------------------------------------------------------------- invariants


def check_level_admissible(N: int) -> bool:
    if N < 1:
        return False
    if N % 256 == 0 or N % 81 == 0:
        return False
    return all(e < 2 for p, e in prime_factors(N).items() if p > 3)


def index_gamma0(N: int) -> int:
    out = N
    for p in prime_factors(N):
        out = out // p * (p + 1)
    return out


def _kronecker_minus(a: int, p: int) -> int:
    """(-a / p) for a in {1, 3} and prime p."""
    if p == 2:
        return 0 if a == 1 else -1
    if a == 3 and p == 3:
        return 0
    if a == 1:
        return 1 if p % 4 == 1 else -1
    return 1 if p % 3 == 1 else -1


def elliptic_points(N: int) -> tuple[int, int]:
    ps = prime_factors(N)
    nu2 = 0 if N % 4 == 0 else _prod(1 + _kronecker_minus(1, p) for p in ps)
    nu3 = 0 if N % 9 == 0 else _prod(1 + _kronecker_minus(3, p) for p in ps)
    return nu2, nu3


def _prod(it) -> int:
    out = 1
    for x in it:
        out *= x
    return out


def cusp_classes(N: int) -> list[tuple[int, int]]:
    """Pairs (d, m_d): cusps of Gamma0(N) with denominator d, m_d of them."""
    return [(d, euler_phi(gcd(d, N // d))) for d in divisors(N)]


def cusp_count(N: int) -> int:
    return sum(m for _, m in cusp_classes(N))


def genus(N: int) -> int:
    nu2, nu3 = elliptic_points(N)
    g = 1 + Fraction(index_gamma0(N), 12) - Fraction(nu2, 4) - Fraction(nu3, 3) - Fraction(cusp_count(N), 2)
    assert g.denominator == 1
    return int(g)


def cusp_dimension(k: int, N: int) -> int:
    if k % 2 or k < 2:
        raise UnsupportedWeight("even weight >= 2 expected")
    g = genus(N)
    if k == 2:
        return g
    nu2, nu3 = elliptic_points(N)
    return (k - 1) * (g - 1) + (k // 4) * nu2 + (k // 3) * nu3 + (k // 2 - 1) * cusp_count(N)


def dimension(k: int, N: int) -> int:
    """dim M_k(Gamma0(N)) for even k >= 4 (valence/genus formula)."""
    if k % 2 or k < 4:
        raise UnsupportedWeight("even weight >= 4 expected")
    return cusp_dimension(k, N) + cusp_count(N)


def sturm_bound(k: int, N: int) -> int:
    return (k * index_gamma0(N)) // 12


# ---------------------------------------------------------------- eta quotients


@dataclass(frozen=True)
class EtaQuotient:
    """prod_{delta | N} eta(delta z)^{r_delta}; ``exponents`` holds the nonzero (delta, r)."""

    level: int
    exponents: tuple[tuple[int, int], ...]

    @classmethod
    def from_dict(cls, level: int, r: dict[int, int]) -> "EtaQuotient":
        return cls(level, tuple(sorted((d, e) for d, e in r.items() if e)))

    @property
    def r(self) -> dict[int, int]:
        return dict(self.exponents)

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(e for _, e in self.exponents), 2)

    @property
    def leading_power(self) -> Fraction:
        return Fraction(sum(d * e for d, e in self.exponents), 24)

    def vector(self) -> tuple[int, ...]:
        r = self.r
        return tuple(r.get(d, 0) for d in divisors(self.level))

    def __add__(self, other: "EtaQuotient") -> "EtaQuotient":
        assert self.level == other.level
        r = self.r
        for d, e in other.exponents:
            r[d] = r.get(d, 0) + e
        return EtaQuotient.from_dict(self.level, r)

    def orders(self) -> dict[int, Fraction]:
        """Order of vanishing at the cusps with denominator d (local uniformizer)."""
        N = self.level
        out = {}
        for d in divisors(N):
            s = sum(Fraction(gcd(d, de) ** 2 * e, gcd(d, N // d) * d * de) for de, e in self.exponents)
            out[d] = s * N / 24
        return out

    def is_cuspidal(self) -> bool:
        return all(v > 0 for v in self.orders().values())

    @property
    def name(self) -> str:
        return "eta[" + ",".join(f"{d}^{e}" for d, e in self.exponents) + "]"


_ETA_RE = re.compile(r"^(?:(?P<scale>-?\d+(?:/\d+)?)\*)?eta\[(?P<body>[^\]]*)\]$")


def parse_eta_label(label: str, level: int) -> tuple[Fraction, EtaQuotient]:
    m = _ETA_RE.match(label)
    if not m:
        raise ValueError(f"not an eta label: {label!r}")
    r = {}
    if m["body"]:
        for part in m["body"].split(","):
            d, e = part.split("^")
            r[int(d)] = int(e)
    return Fraction(m["scale"] or 1), EtaQuotient.from_dict(level, r)


def eta_is_valid(e: EtaQuotient, k: int, N: int) -> bool:
    """Ligozat criteria: e lies in M_k(Gamma0(N)) with trivial character."""
    if any(N % d for d, _ in e.exponents):
        return False
    if e.level != N:
        e = EtaQuotient(N, e.exponents)
    if e.weight != k:
        return False
    if sum(d * r for d, r in e.exponents) % 24 or sum((N // d) * r for d, r in e.exponents) % 24:
        return False
    s = Fraction((-1) ** k)
    for d, r in e.exponents:
        s *= Fraction(d) ** r
    if exact_sqrt(s) is None:
        return False
    return all(v >= 0 for v in e.orders().values())


def _pentagonal(P: int, d: int) -> list[int]:
    """prod_n (1 - q^{dn}) to q^P via Euler's pentagonal number theorem."""
    c = [0] * (P + 1)
    j = 0
    while True:
        hit = False
        for m in ((j, -j) if j else (0,)):
            n = d * m * (3 * m - 1) // 2
            if n <= P:
                c[n] += -1 if m % 2 else 1
                hit = True
        if not hit:
            return c
        j += 1


def _eta_product_ints(r: dict[int, int], P: int) -> list[int]:
    """Integer coefficients of prod_delta prod_n (1 - q^{delta n})^{r_delta} to q^P."""
    cap = flint.ctx.cap
    flint.ctx.cap = P + 1
    try:
        num = flint.fmpz_series([1], prec=P + 1)
        den = flint.fmpz_series([1], prec=P + 1)
        for d, e in r.items():
            s = flint.fmpz_series(_pentagonal(P, d), prec=P + 1)
            if e > 0:
                num = num * s**e
            elif e < 0:
                den = den * s ** (-e)
        f = num / den
        out = [int(c) for c in f.coeffs()]
    finally:
        flint.ctx.cap = cap
    return out + [0] * (P + 1 - len(out))


def _eta_product_recurrence(r: dict[int, int], P: int) -> list[int]:
    """Same as _eta_product_ints via the logarithmic-derivative recurrence (reference)."""
    c = [0] * (P + 1)
    for d, e in r.items():
        for m in range(d, P + 1, d):
            c[m] += e
    # q F'/F = sum s_n q^n with s_n = -sum_{m | n} m c_m
    s = [0] * (P + 1)
    for m in range(1, P + 1):
        if c[m]:
            mc = m * c[m]
            for n in range(m, P + 1, m):
                s[n] -= mc
    nz = [(j, s[j]) for j in range(1, P + 1) if s[j]]
    f = [0] * (P + 1)
    f[0] = 1
    for n in range(1, P + 1):
        acc = 0
        for j, sj in nz:
            if j > n:
                break
            acc += sj * f[n - j]
        f[n] = acc // n
    return f


def eta_qexp_ints(e: EtaQuotient, M: int) -> list[int]:
    lead = e.leading_power
    if lead.denominator != 1 or lead < 0:
        raise ValueError(f"{e.name} has no integral q-expansion (leading power {lead})")
    lead = int(lead)
    out = [0] * (M + 1)
    if lead <= M:
        out[lead:] = _eta_product_ints(e.r, M - lead)
    return out


def eta_qexp(e: EtaQuotient, M: int) -> QSeries:
    return QSeries(eta_qexp_ints(e, M))


def eta_atkin_lehner(e: EtaQuotient, N: int, k: int) -> tuple[EtaQuotient, Fraction]:
    """(e', c) with i^k (e|_k w_N) = c * e'.

    From eta(-1/z) = sqrt(z/i) eta(z): r'_{N/delta} = r_delta and
    c^2 = N^k / prod delta^{r_delta}.
    """
    prod = Fraction(1)
    for d, r in e.exponents:
        prod *= Fraction(d) ** r
    c = exact_sqrt(Fraction(N) ** k / prod)
    assert c is not None, f"irrational Atkin-Lehner multiplier for {e.name}"
    image = EtaQuotient.from_dict(N, {N // d: r for d, r in e.exponents})
    return image, c


def eisenstein_atkin_lehner_level_scaled(k: int, N: int, t: int, character=None) -> tuple[int, Fraction]:
    """E^1_t |-> c * E^1_{N/t} under g -> i^k g|_k w_N, with c = i^k (N/t^2)^{k/2}."""
    if character is not None and not character.is_trivial:
        raise DeferToIngestion("Atkin-Lehner image of a twisted Eisenstein series is not derived here")
    if N % t:
        raise ValueError("t must divide N")
    if k % 2:
        raise DeferToIngestion("odd weight")
    c = Fraction((-1) ** (k // 2)) * Fraction(N, t * t) ** (k // 2)
    return N // t, c


# ---------------------------------------------------------------- eta search


@lru_cache(maxsize=None)
def _order_inverse(N: int) -> tuple[tuple[tuple[int, ...], ...], int]:
    divs = divisors(N)
    a = [[Fraction(gcd(d, de) ** 2 * N, 24 * gcd(d, N // d) * d * de) for de in divs] for d in divs]
    inv = [[to_fraction(x) for x in row] for row in inverse([[q(x) for x in row] for row in a])]
    den = lcm(*(x.denominator for row in inv for x in row))
    return tuple(tuple(int(x * den) for x in row) for row in inv), den


def _count_compositions(total: int, mults: Sequence[int]) -> int:
    ways = [1] + [0] * total
    for m in mults:
        for s in range(m, total + 1):
            ways[s] += ways[s - m]
    return ways[total]


def order_vector_count(k: int, N: int) -> int:
    total = k * index_gamma0(N) // 12
    return _count_compositions(total, [m for _, m in cusp_classes(N)])


def _compositions(total: int, mults: Sequence[int]):
    if len(mults) == 1:
        if total % mults[0] == 0:
            yield (total // mults[0],)
        return
    m = mults[0]
    for v in range(total // m + 1):
        for rest in _compositions(total - m * v, mults[1:]):
            yield (v,) + rest


def holomorphic_eta_quotients(k: int, N: int) -> list[EtaQuotient]:
    """Every eta quotient in M_k(Gamma0(N)) with trivial character.

    Enumerates the integral order vectors at the cusps (they sum to
    k [SL2:Gamma0(N)] / 12) and inverts the order map.
    """
    total = k * index_gamma0(N) // 12
    if (k * index_gamma0(N)) % 12:
        return []
    classes = cusp_classes(N)
    mults = [m for _, m in classes]
    inv, den = _order_inverse(N)
    divs = divisors(N)
    out = []
    for v in _compositions(total, mults):
        r = {}
        ok = True
        for de, row in zip(divs, inv):
            s = sum(a * b for a, b in zip(row, v))
            if s % den:
                ok = False
                break
            if s:
                r[de] = s // den
        if not ok:
            continue
        e = EtaQuotient.from_dict(N, r)
        if eta_is_valid(e, k, N):
            out.append(e)
    out.sort(key=lambda e: e.vector())
    return out


def search_eta_spanning(k: int, N: int, M: int | None = None, exponent_bound: int = 24) -> list[EtaQuotient]:
    """All valid eta quotients of weight k and level N with |r_delta| <= bound, lexicographic.

    ``M`` is accepted for interface symmetry with basis assembly; the search
    itself does not depend on truncation.
    """
    return [e for e in holomorphic_eta_quotients(k, N) if all(abs(x) <= exponent_bound for _, x in e.exponents)]


_DIRECT_BUDGET = 60000


def _greedy(cands: Iterable[EtaQuotient], k: int, N: int, target: int, seen: set) -> list[EtaQuotient]:
    L = sturm_bound(k, N)
    sp = EchelonSpace(L + 1)
    chosen = []
    for e in cands:
        if e in seen:
            continue
        seen.add(e)
        if sp.add(eta_qexp_ints(e, L)):
            chosen.append(e)
            if sp.rank == target:
                break
    return chosen


def _simplicity(e: EtaQuotient):
    return (max((abs(x) for _, x in e.exponents), default=0), e.leading_power, e.vector())


@lru_cache(maxsize=None)
def _holomorphic_generators(w: int, N: int) -> tuple[EtaQuotient, ...]:
    if order_vector_count(w, N) > _DIRECT_BUDGET:
        return ()
    allq = sorted(holomorphic_eta_quotients(w, N), key=_simplicity)
    return tuple(_greedy(allq, w, N, dimension(w, N) if w >= 4 else 10**9, set()))


@lru_cache(maxsize=None)
def cusp_eta_generators(k: int, N: int) -> tuple[EtaQuotient, ...]:
    """Cuspidal eta quotients spanning as much of S_k(Gamma0(N)) as this strategy reaches.

    Direct enumeration when it is cheap, otherwise products of cusp forms of
    lower weight with holomorphic generators of weight 2, 4 or 6.
    """
    target = cusp_dimension(k, N)
    if target == 0:
        return ()

    def candidates():
        if order_vector_count(k, N) <= _DIRECT_BUDGET:
            direct = [e for e in holomorphic_eta_quotients(k, N) if e.is_cuspidal()]
            yield from sorted(direct, key=_simplicity)
        for w in (2, 4, 6):
            if k - w < 2:
                continue
            lower = cusp_eta_generators(k - w, N)
            gens = _holomorphic_generators(w, N)
            for c in lower:
                for g in gens:
                    yield c + g

    return tuple(_greedy(candidates(), k, N, target, set()))


# ---------------------------------------------------------------- bases


@dataclass(frozen=True)
class BasisForm:
    label: str
    provenance: str  # eisenstein | eta | ingested
    series: QSeries
    al_image: QSeries


@dataclass
class SpaceBasis:
    weight: int
    level: int
    order: int
    forms: list[BasisForm]
    al_matrix: list[list[Fraction]]  # g~^j = sum_i W[i][j] g^i
    _space: EchelonSpace | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.forms)

    @property
    def labels(self) -> list[str]:
        return [f.label for f in self.forms]

    @property
    def series(self) -> list[QSeries]:
        return [f.series for f in self.forms]

    @property
    def al_images(self) -> list[QSeries]:
        return [f.al_image for f in self.forms]

    def echelon(self) -> EchelonSpace:
        if self._space is None:
            sp = EchelonSpace(self.order + 1)
            for f in self.forms:
                if not sp.add(f.series.coeffs):
                    raise IncompleteBasis("basis forms are linearly dependent")
            self._space = sp
        return self._space

    def coordinates(self, g: QSeries) -> list[Fraction]:
        """x with g = sum_j x_j g^j (g must be known at least to the basis order)."""
        try:
            return [to_fraction(c) for c in self.echelon().coords(g.truncate(self.order).coeffs)]
        except NotInSpan as exc:
            raise NotInSpan("form is not in the span of the basis") from exc

    def combine(self, x: Sequence) -> QSeries:
        return linear_combination(x, self.series)

    def combine_al(self, x: Sequence) -> QSeries:
        return linear_combination(x, self.al_images)

    def al_coordinates(self, x: Sequence) -> list[Fraction]:
        """Coordinates of i^k (g|w_N) for g with coordinates x."""
        return [sum((self.al_matrix[i][j] * x[j] for j in range(self.dim)), Fraction(0)) for i in range(self.dim)]

    def series_to(self, order: int) -> list[QSeries]:
        """Basis expansions to q^order, regenerated from the labels when needed."""
        if order <= self.order:
            return [f.series.truncate(order) for f in self.forms]
        out = []
        for f in self.forms:
            if f.provenance == "ingested":
                raise IncompleteBasis(f"form {f.label} was ingested to q^{self.order}; cannot extend")
            out.append(regenerate_form(f.label, self.weight, self.level, order))
        return out

    def extended(self, order: int) -> "SpaceBasis":
        """The same basis regenerated to a larger truncation (internal sources only)."""
        if order <= self.order:
            return self
        series = self.series_to(order)
        forms = list(zip(self.forms, series))
        out = []
        for j, (f, s) in enumerate(forms):
            img = linear_combination([self.al_matrix[i][j] for i in range(self.dim)], series)
            out.append(BasisForm(f.label, f.provenance, s, img))
        return SpaceBasis(self.weight, self.level, order, out, self.al_matrix)


def _eisenstein_form(lab: EisensteinLabel, M: int) -> tuple[Fraction, QSeries]:
    """Basis normalization: t^{k/2} E_k(tz) with constant term 1 for trivial phi, E^phi_t otherwise."""
    s = eisenstein_qexp(lab, M)
    if lab.character.is_trivial:
        scale = Fraction(lab.t) ** (lab.weight // 2) / s[0]
        return scale, scale * s
    return Fraction(1), s


_EIS_RE = re.compile(r"^E(?P<k>\d+)(?:_(?P<chi>chi-?\d+))?_t(?P<t>\d+)$")


def parse_eisenstein_label(label: str, level: int) -> EisensteinLabel | None:
    m = _EIS_RE.match(label)
    if not m:
        return None
    chi = character_from_name(m["chi"]) if m["chi"] else character_from_name("chi1")
    return EisensteinLabel(int(m["k"]), chi, int(m["t"]), level)


def regenerate_form(label: str, k: int, N: int, M: int) -> QSeries:
    lab = parse_eisenstein_label(label, N)
    if lab is not None:
        return _eisenstein_form(lab, M)[1]
    scale, e = parse_eta_label(label, N)
    return scale * eta_qexp(e, M)


def _al_matrix(forms: list[BasisForm], M: int) -> list[list[Fraction]]:
    sp = EchelonSpace(M + 1)
    for f in forms:
        sp.add(f.series.coeffs)
    d = len(forms)
    w = [[Fraction(0)] * d for _ in range(d)]
    for j, f in enumerate(forms):
        try:
            col = sp.coords(f.al_image.coeffs)
        except NotInSpan as exc:
            raise MissingAtkinLehner(f"AL image of {f.label} is not in the span of the basis") from exc
        for i, c in enumerate(col):
            w[i][j] = to_fraction(c)
    return w


def _is_identity_square(w: list[list[Fraction]]) -> bool:
    d = len(w)
    for i in range(d):
        for j in range(d):
            s = sum((w[i][l] * w[l][j] for l in range(d) if w[i][l] and w[l][j]), Fraction(0))
            if s != (1 if i == j else 0):
                return False
    return True


def default_truncation(k: int, N: int) -> int:
    return max(2 * dimension(k, N), sturm_bound(k, N))


def assemble_basis(
    k: int,
    N: int,
    M: int | None = None,
    sources: Sequence[str] = ("eisenstein", "eta-search"),
    basis_file: str | Path | None = None,
) -> SpaceBasis:
    """Assemble a rational basis of M_k(Gamma0(N)) with exact Atkin-Lehner data."""
    if not check_level_admissible(N):
        raise LevelRestrictionError(f"level {N} violates the square-divisibility restriction")
    dim = dimension(k, N)
    if M is None:
        M = default_truncation(k, N)
    if M <= dim:
        raise ValueError(f"truncation M={M} must exceed dim={dim}")
    if M < sturm_bound(k, N):
        raise ValueError(f"truncation M={M} is below the Sturm bound {sturm_bound(k, N)}")
    if "file" in sources and basis_file is not None:
        b = load_basis(basis_file)
        if (b.weight, b.level) != (k, N):
            raise BasisFileError(f"file holds k={b.weight} N={b.level}, wanted k={k} N={N}")
        if b.order < M:
            raise BasisFileError(f"file truncated at q^{b.order} < requested M={M}")
        return b
    forms: list[BasisForm] = []
    L = sturm_bound(k, N)
    sp = EchelonSpace(L + 1)
    if "eisenstein" in sources:
        labels = eisenstein_labels(k, N)
        by_t = {}
        for lab in labels:
            scale, s = _eisenstein_form(lab, M)
            if not lab.character.is_trivial:
                raise MissingAtkinLehner(f"{lab.name}: no exact Atkin-Lehner image; supply a basis file")
            by_t[lab.t] = s
        for lab in labels:
            tp, c = eisenstein_atkin_lehner_level_scaled(k, N, lab.t, lab.character)
            # with the t^{k/2} normalization the image is (-1)^{k/2} times the N/t form
            img = Fraction((-1) ** (k // 2)) * by_t[tp]
            s = by_t[lab.t]
            sp.add(s.coeffs[: L + 1])
            forms.append(BasisForm(lab.name, "eisenstein", s, img))
    if "eta-search" in sources or "eta" in sources:
        have = {f.label for f in forms}
        for e in cusp_eta_generators(k, N):
            pending = [(Fraction(1), e)]
            img, c = eta_atkin_lehner(e, N, k)
            pending.append((c, img))
            for scale, ee in pending:
                lab = ee.name if scale == 1 else f"{format_rat(scale)}*{ee.name}"
                if lab in have:
                    continue
                s = scale * eta_qexp(ee, M)
                if not sp.add(s.coeffs[: L + 1]):
                    continue
                img2, c2 = eta_atkin_lehner(ee, N, k)
                forms.append(BasisForm(lab, "eta", s, (scale * c2) * eta_qexp(img2, M)))
                have.add(lab)
            if len(forms) >= dim:
                break
    if len(forms) < dim:
        raise IncompleteBasis(f"rank deficit {dim - len(forms)}: found {len(forms)} of {dim} forms for k={k} N={N}")
    w = _al_matrix(forms, M)
    if not _is_identity_square(w):
        raise MissingAtkinLehner("Atkin-Lehner matrix does not square to the identity")
    return SpaceBasis(k, N, M, forms, w)


# ---------------------------------------------------------------- basis files


def save_basis(basis: SpaceBasis, path: str | Path) -> None:
    lines = [f"MKBASIS v1 k={basis.weight} N={basis.level} M={basis.order} dim={basis.dim}"]
    for f in basis.forms:
        lines.append(f"FORM {f.label} {f.provenance}")
        lines.append(render_series(f.series))
        lines.append("AL")
        lines.append(render_series(f.al_image))
    lines.append("W")
    for row in basis.al_matrix:
        lines.append(" ".join(format_rat(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


_HEADER_RE = re.compile(r"^MKBASIS v1 k=(\d+) N=(\d+) M=(\d+) dim=(\d+)$")


def load_basis(path: str | Path, regenerate_check: bool = True) -> SpaceBasis:
    """Read a basis file and re-verify rank, W^2 = I and the stated AL images."""
    raw = Path(path).read_text().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw) if ln.strip() and not ln.lstrip().startswith("#")]
    pos = 0

    def take(what: str) -> tuple[int, str]:
        nonlocal pos
        if pos >= len(lines):
            raise BasisFileError(f"unexpected end of file, expected {what}")
        item = lines[pos]
        pos += 1
        return item

    ln, head = take("header")
    m = _HEADER_RE.match(head)
    if not m:
        raise BasisFileError(f"line {ln}: bad header {head!r}")
    k, N, M, dim = map(int, m.groups())
    forms = []
    for _ in range(dim):
        ln, t = take("FORM line")
        parts = t.split()
        if len(parts) != 3 or parts[0] != "FORM":
            raise BasisFileError(f"line {ln}: expected 'FORM <label> <provenance>'")
        label, prov = parts[1], parts[2]
        if prov not in ("eisenstein", "eta", "ingested"):
            raise BasisFileError(f"line {ln}: unknown provenance {prov!r}")
        ln, t = take("coefficients")
        try:
            s = parse_series(t)
        except (ValueError, ZeroDivisionError) as exc:
            raise BasisFileError(f"line {ln}: {exc}") from exc
        ln, t = take("AL")
        if t != "AL":
            raise BasisFileError(f"line {ln}: expected 'AL'")
        ln, t = take("AL coefficients")
        try:
            img = parse_series(t)
        except (ValueError, ZeroDivisionError) as exc:
            raise BasisFileError(f"line {ln}: {exc}") from exc
        if s.order != M or img.order != M:
            raise BasisFileError(f"line {ln}: form {label} has {s.order + 1} coefficients, header says M={M}")
        forms.append(BasisForm(label, prov, s, img))
    ln, t = take("W")
    if t != "W":
        raise BasisFileError(f"line {ln}: expected 'W' (is dim={dim} right?)")
    w = []
    for _ in range(dim):
        ln, t = take("W row")
        row = [Fraction(x) for x in t.split()]
        if len(row) != dim:
            raise BasisFileError(f"line {ln}: W row has {len(row)} entries, expected {dim}")
        w.append(row)
    if pos != len(lines):
        raise BasisFileError(f"line {lines[pos][0]}: trailing content (dim mismatch?)")
    basis = SpaceBasis(k, N, M, forms, w)
    verify_basis(basis, regenerate_check=regenerate_check)
    return basis


def verify_basis(basis: SpaceBasis, regenerate_check: bool = True) -> None:
    k, N = basis.weight, basis.level
    if basis.dim != dimension(k, N):
        raise BasisFileError(f"integrity: {basis.dim} forms but dim M_{k}(Gamma0({N})) = {dimension(k, N)}")
    L = min(sturm_bound(k, N), basis.order)
    sp = EchelonSpace(L + 1)
    for f in basis.forms:
        sp.add(f.series.coeffs[: L + 1])
    if sp.rank != basis.dim:
        raise BasisFileError(f"integrity: rank {sp.rank} < dim {basis.dim} up to the Sturm bound")
    if not _is_identity_square(basis.al_matrix):
        raise BasisFileError("integrity: W*W != I")
    for j, f in enumerate(basis.forms):
        img = linear_combination([basis.al_matrix[i][j] for i in range(basis.dim)], basis.series)
        if img != f.al_image:
            raise BasisFileError(f"integrity: AL line of {f.label} disagrees with W")
        if regenerate_check and f.provenance in ("eisenstein", "eta"):
            if regenerate_form(f.label, k, N, basis.order) != f.series:
                raise BasisFileError(f"integrity: {f.label} does not match its regenerated expansion")
