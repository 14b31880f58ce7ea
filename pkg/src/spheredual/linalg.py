"""Exact dense linear algebra over Q (gmpy2 mpq) used by basis assembly,
the LP presolve and the eigenform tools."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)


def q(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class NotInSpan(ValueError):
    pass


class EchelonSpace:
    """Incrementally maintained row space with coordinates in the inserted rows.

    ``add`` returns True when the new row increases the rank.  ``coords``
    expresses a vector in terms of the accepted rows.
    """

    def __init__(self, length: int):
        self.length = length
        self.rows: list[list[mpq]] = []  # reduced, pivot entry 1
        self.pivots: list[int] = []
        self.combos: list[dict[int, mpq]] = []  # reduced row = sum combo[j] * accepted[j]
        self.count = 0

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _reduce(self, v: list[mpq]) -> tuple[list[mpq], dict[int, mpq]]:
        v = list(v)
        combo: dict[int, mpq] = {}
        for row, p, cmb in zip(self.rows, self.pivots, self.combos):
            f = v[p]
            if f:
                for i in range(p, self.length):
                    if row[i]:
                        v[i] -= f * row[i]
                for j, c in cmb.items():
                    combo[j] = combo.get(j, ZERO) - f * c
        return v, combo

    def is_independent(self, vec: Sequence) -> bool:
        v, _ = self._reduce([q(x) for x in vec[: self.length]])
        return any(v)

    def add(self, vec: Sequence) -> bool:
        v, combo = self._reduce([q(x) for x in vec[: self.length]])
        p = next((i for i, x in enumerate(v) if x), None)
        if p is None:
            return False
        idx = self.count
        self.count += 1
        combo[idx] = ONE
        inv = 1 / v[p]
        v = [x * inv for x in v]
        combo = {j: c * inv for j, c in combo.items() if c}
        # back-substitute so stored rows stay fully reduced
        for r, (row, cmb) in enumerate(zip(self.rows, self.combos)):
            f = row[p]
            if f:
                self.rows[r] = [a - f * b for a, b in zip(row, v)]
                for j, c in combo.items():
                    cmb[j] = cmb.get(j, ZERO) - f * c
        self.rows.append(v)
        self.pivots.append(p)
        self.combos.append(combo)
        return True

    def coords(self, vec: Sequence) -> list[mpq]:
        """Coefficients c with sum_j c_j * accepted_j == vec (on the stored length)."""
        v = [q(x) for x in vec[: self.length]]
        out = [ZERO] * self.count
        for row, p, cmb in zip(self.rows, self.pivots, self.combos):
            f = v[p]
            if f:
                for i in range(p, self.length):
                    if row[i]:
                        v[i] -= f * row[i]
                for j, c in cmb.items():
                    out[j] += f * c
        if any(v):
            raise NotInSpan("vector is not in the span of the accepted rows")
        return out


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    sp = EchelonSpace(len(rows[0]))
    for r in rows:
        sp.add(r)
    return sp.rank


def matmul(a, b):
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col) if x and y), ZERO) for col in bt] for row in a]


def identity(n: int):
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def solve_square(a, b):
    """Solve a x = b exactly for square nonsingular a (lists of mpq); None if singular."""
    n = len(a)
    m = [list(map(q, row)) + [q(bi)] for row, bi in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        prow = [x * inv for x in m[col]]
        m[col] = prow
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], prow)]
    return [m[r][n] for r in range(n)]


def inverse(a):
    n = len(a)
    m = [list(map(q, row)) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        prow = [x * inv for x in m[col]]
        m[col] = prow
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], prow)]
    return [row[n:] for row in m]


def nullspace(a, ncols: int | None = None):
    """Basis of {x : a x = 0} (list of column vectors as lists)."""
    ncols = ncols if ncols is not None else (len(a[0]) if a else 0)
    m = [list(map(q, row)) for row in a]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col]:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [ZERO] * ncols
        v[fcol] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][fcol]
        basis.append(v)
    return basis


def charpoly(a) -> list[mpq]:
    """Characteristic polynomial det(xI - a), coefficients lowest degree first.

    Hessenberg reduction followed by the standard recurrence; O(n^3).
    """
    n = len(a)
    h = [list(map(q, row)) for row in a]
    for j in range(n - 2):
        piv = next((i for i in range(j + 1, n) if h[i][j]), None)
        if piv is None:
            continue
        if piv != j + 1:
            h[j + 1], h[piv] = h[piv], h[j + 1]
            for row in h:
                row[j + 1], row[piv] = row[piv], row[j + 1]
        inv = 1 / h[j + 1][j]
        for i in range(j + 2, n):
            f = h[i][j] * inv
            if f:
                h[i] = [x - f * y for x, y in zip(h[i], h[j + 1])]
                for row in h:
                    row[j + 1] += f * row[i]
    # p_k = charpoly of leading k x k block
    polys = [[ONE]]
    for k in range(1, n + 1):
        hk = h[k - 1][k - 1]
        prev = polys[k - 1]
        pk = [ZERO] + prev  # x * p_{k-1}
        for i, c in enumerate(prev):
            pk[i] -= hk * c
        prod = ONE
        for i in range(1, k):
            prod *= h[k - i][k - i - 1]
            coef = prod * h[k - i - 1][k - 1]
            if coef:
                for t, c in enumerate(polys[k - i - 1]):
                    pk[t] -= coef * c
        polys.append(pk)
    return polys[n]
