"""Real primitive Dirichlet characters, generalized Bernoulli numbers and the
Eisenstein series ``E^phi_t`` spanning the Eisenstein part of M_k(Gamma0(N)).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd

from .arith import divisors, sigma_table
from .qseries import QSeries


class UnsupportedConductor(ValueError):
    pass


class UnsupportedWeight(ValueError):
    pass


class LevelRestrictionError(ValueError):
    """N is divisible by 16^2, 9^2 or p^2 for some prime p > 3."""


@dataclass(frozen=True)
class RealCharacter:
    """A real Dirichlet character stored as its value table mod ``conductor``.

    ``table[a]`` is phi(a) for 0 <= a < conductor (zero when gcd(a, u) > 1).
    """

    conductor: int
    table: tuple[int, ...]

    def __call__(self, n: int) -> int:
        return self.table[n % self.conductor]

    @property
    def parity(self) -> int:
        return self(-1)

    @property
    def is_trivial(self) -> bool:
        return self.conductor == 1

    @property
    def discriminant(self) -> int:
        return self.parity * self.conductor

    @property
    def name(self) -> str:
        return f"chi{self.discriminant}"

    def is_multiplicative(self) -> bool:
        u = self.conductor
        return all(self(a * b) == self(a) * self(b) for a in range(u) for b in range(u))

    def is_primitive(self) -> bool:
        u = self.conductor
        for v in divisors(u):
            if v == u:
                continue
            # induced from modulus v iff trivial on units congruent to 1 mod v
            if all(self(a) == 1 for a in range(1, u) if gcd(a, u) == 1 and a % v == 1 % v):
                return False
        return True


_CHAR_CACHE: dict[int, list[RealCharacter]] = {}


def list_real_primitive_characters(u: int) -> list[RealCharacter]:
    """All real primitive characters of conductor u, for u dividing 24."""
    if u < 1 or 24 % u:
        raise UnsupportedConductor(f"conductor {u} does not divide 24")
    if u in _CHAR_CACHE:
        return list(_CHAR_CACHE[u])
    if u == 1:
        found = [RealCharacter(1, (1,))]
    else:
        units = [a for a in range(1, u) if gcd(a, u) == 1]
        found = []
        for signs in itertools.product((1, -1), repeat=len(units)):
            tab = [0] * u
            for a, s in zip(units, signs):
                tab[a] = s
            chi = RealCharacter(u, tuple(tab))
            if chi(1) == 1 and chi.is_multiplicative() and chi.is_primitive():
                found.append(chi)
        found.sort(key=lambda c: -c.parity)
    _CHAR_CACHE[u] = found
    return list(found)


def trivial_character() -> RealCharacter:
    return list_real_primitive_characters(1)[0]


def character_from_name(name: str) -> RealCharacter:
    if not name.startswith("chi"):
        raise ValueError(f"bad character name {name!r}")
    disc = int(name[3:])
    for chi in list_real_primitive_characters(abs(disc)):
        if chi.discriminant == disc:
            return chi
    raise ValueError(f"no real primitive character with discriminant {disc}")


def bernoulli_numbers(k: int) -> list[Fraction]:
    """B_0..B_k with the convention B_1 = -1/2."""
    b = [Fraction(1)]
    for m in range(1, k + 1):
        b.append(-sum(comb(m + 1, j) * b[j] for j in range(m)) / (m + 1))
    return b


def bernoulli_polynomial(k: int) -> tuple[Fraction, ...]:
    """Coefficients of B_k(x), lowest degree first."""
    if k < 0:
        raise ValueError("k must be >= 0")
    b = bernoulli_numbers(k)
    return tuple(comb(k, j) * b[k - j] for j in range(k + 1))


def poly_eval(coeffs, x):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def generalized_bernoulli(k: int, phi: RealCharacter) -> Fraction:
    """B_{k,phi} = u^(k-1) sum_{a=1}^u phi(a) B_k(a/u)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    u = phi.conductor
    bk = bernoulli_polynomial(k)
    return Fraction(u) ** (k - 1) * sum(phi(a) * poly_eval(bk, Fraction(a, u)) for a in range(1, u + 1))


def l_value_at_one_minus_k(k: int, phi: RealCharacter) -> Fraction:
    if k < 2:
        raise ValueError("only k >= 2 is supported")
    return -generalized_bernoulli(k, phi) / k


@dataclass(frozen=True)
class EisensteinLabel:
    weight: int
    character: RealCharacter
    t: int
    level: int

    def __post_init__(self):
        u = self.character.conductor
        if self.t < 1 or self.level % (u * u * self.t):
            raise ValueError(f"u^2 t = {u * u * self.t} does not divide N = {self.level}")

    @property
    def name(self) -> str:
        if self.character.is_trivial:
            return f"E{self.weight}_t{self.t}"
        return f"E{self.weight}_{self.character.name}_t{self.t}"

    def constant_term(self) -> Fraction:
        if not self.character.is_trivial:
            return Fraction(0)
        return l_value_at_one_minus_k(self.weight, self.character) / 2


def _check_weight(k: int) -> None:
    if k == 2:
        raise UnsupportedWeight("weight 2 Eisenstein series need separate formulas")
    if k < 3 or k % 2:
        raise UnsupportedWeight(f"only even weights k >= 4 are supported (got {k})")


def eisenstein_qexp(label: EisensteinLabel, M: int) -> QSeries:
    """(delta/2) L(1-k, phi) + sum_{t | n} phi(n/t) sigma_{k-1}(n/t) q^n to order M."""
    k, phi, t = label.weight, label.character, label.t
    _check_weight(k)
    if M < 0:
        raise ValueError("M must be >= 0")
    sig = sigma_table(M // t, k - 1)
    out = [Fraction(0)] * (M + 1)
    out[0] = label.constant_term()
    for m in range(1, M // t + 1):
        v = phi(m)
        if v:
            out[m * t] = Fraction(v * sig[m])
    return QSeries(out)


def eisenstein_labels(k: int, N: int) -> list[EisensteinLabel]:
    """Labels (phi, t) with u^2 t | N; one per basis element of the Eisenstein subspace.

    Real characters pair with themselves here (phi * phi is trivial), so
    both parities occur for every even k.
    """
    from .modspace import check_level_admissible

    _check_weight(k)
    if not check_level_admissible(N):
        raise LevelRestrictionError(f"level {N} violates the square-divisibility restriction")
    out = []
    for u in divisors(24):
        if N % (u * u):
            continue
        for phi in list_real_primitive_characters(u):
            for t in divisors(N // (u * u)):
                out.append(EisensteinLabel(k, phi, t, N))
    return out
