"""Numerical check of the summation identity behind the dual bound.

For a pair g = sum a_n q^n, g~ = sum b_n q^n in M_k(Gamma0(N)) and the
Gaussian f(x) = exp(-pi s |x|^2) on R^(2k),

    sum_n a_n exp(-pi s n) = (2/sqrt N)^k s^-k sum_n b_n exp(-4 pi n / (N s)).

Both truncated sides are evaluated at 60 digits.  With a growth constant A
(|a_n|, |b_n| <= A n^k) the discarded terms are bounded rigorously: each
tail is at most A t_{M+1} / (1 - rho), where t_n = n^k exp(-lambda n) and
rho bounds the ratio of consecutive terms past M.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .qseries import QSeries

DIGITS = 60
TOLERANCE = mpmath.mpf("1e-10")


@dataclass
class WidthResult:
    s: Fraction
    lhs: mpmath.mpf
    rhs: mpmath.mpf
    discrepancy: mpmath.mpf
    tail: mpmath.mpf | None  # None when no growth constant is known

    @property
    def total(self):
        return self.discrepancy + (self.tail if self.tail is not None else 0)


@dataclass
class SummationCheck:
    results: list[WidthResult] = field(default_factory=list)
    heuristic: bool = False
    passed: bool = False

    @property
    def max_discrepancy(self):
        return max((r.discrepancy for r in self.results), default=mpmath.mpf(0))

    @property
    def max_tail(self):
        tails = [r.tail for r in self.results if r.tail is not None]
        return max(tails, default=None)

    @property
    def max_total(self):
        return max((r.total for r in self.results), default=mpmath.mpf(0))


def _tail(A, k: int, lam, M: int):
    """Upper bound for A * sum_{n > M} n^k exp(-lam n); inf if the terms are not yet decreasing."""
    n0 = M + 1
    rho = (mpmath.mpf(n0 + 1) / n0) ** k * mpmath.exp(-lam)
    if rho >= 1:
        return mpmath.inf
    first = mpmath.mpf(n0) ** k * mpmath.exp(-lam * n0)
    # the small factor covers rounding in the evaluation above
    return A * first / (1 - rho) * (1 + mpmath.mpf(10) ** (-DIGITS // 2))


def summation_check(
    g: QSeries,
    g_tilde: QSeries,
    N: int,
    d: int,
    widths: Sequence,
    M: int | None = None,
    growth: Fraction | None = None,
    tolerance=TOLERANCE,
) -> SummationCheck:
    """Evaluate both sides for every width s.

    A width passes when |LHS - RHS| <= tolerance + tail; without a growth
    constant there is no tail bound and the result is flagged heuristic.
    """
    if d % 2 or d <= 0:
        raise ValueError("dimension must be even and positive")
    k = d // 2
    if M is None:
        M = min(g.order, g_tilde.order)
    if M > min(g.order, g_tilde.order):
        raise ValueError("truncation exceeds the known coefficients")
    out = SummationCheck(heuristic=growth is None)
    with mpmath.workdps(DIGITS):
        tol = mpmath.mpf(tolerance)
        a = [mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in g.coeffs[: M + 1]]
        b = [mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in g_tilde.coeffs[: M + 1]]
        ok = True
        for s in widths:
            s = Fraction(s)
            if s <= 0:
                raise ValueError("widths must be positive")
            sm = mpmath.mpf(s.numerator) / s.denominator
            lam_l = mpmath.pi * sm
            lam_r = 4 * mpmath.pi / (N * sm)
            pref = (2 / mpmath.sqrt(N)) ** k * sm ** (-k)
            lhs = mpmath.fsum(a[n] * mpmath.exp(-lam_l * n) for n in range(M + 1) if a[n])
            rhs = pref * mpmath.fsum(b[n] * mpmath.exp(-lam_r * n) for n in range(M + 1) if b[n])
            disc = abs(lhs - rhs)
            tail = None
            if growth is not None:
                A = mpmath.mpf(Fraction(growth).numerator) / Fraction(growth).denominator
                tail = _tail(A, k, lam_l, M) + pref * _tail(A, k, lam_r, M)
            out.results.append(WidthResult(s, lhs, rhs, disc, tail))
            ok = ok and disc <= tol + (tail if tail is not None else 0)
        out.passed = ok
    return out
