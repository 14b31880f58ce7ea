"""Small integer helpers shared across modules."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import isqrt

from sympy import factorint


@lru_cache(maxsize=None)
def divisors(n: int) -> tuple[int, ...]:
    small = [d for d in range(1, isqrt(n) + 1) if n % d == 0]
    return tuple(sorted(set(small + [n // d for d in small])))


def prime_factors(n: int) -> dict[int, int]:
    return {int(p): int(e) for p, e in factorint(n).items()}


def sigma(n: int, e: int) -> int:
    return sum(d**e for d in divisors(n))


def sigma_table(m: int, e: int) -> list[int]:
    """``[sigma_e(0)=0, sigma_e(1), ..., sigma_e(m)]`` by sieving."""
    tab = [0] * (m + 1)
    for d in range(1, m + 1):
        p = d**e
        for k in range(d, m + 1, d):
            tab[k] += p
    return tab


def exact_sqrt(x) -> Fraction | None:
    """Square root of a non-negative rational if it is rational, else None."""
    x = Fraction(x)
    if x < 0:
        return None
    p, q = isqrt(x.numerator), isqrt(x.denominator)
    if p * p == x.numerator and q * q == x.denominator:
        return Fraction(p, q)
    return None


def euler_phi(n: int) -> int:
    out = n
    for p in prime_factors(n):
        out = out // p * (p - 1)
    return out
