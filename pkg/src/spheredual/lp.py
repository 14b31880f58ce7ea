"""The dual linear program over M_k(Gamma0(N)) and an exact rational solver.

Convention: maximize c.x subject to E x = e and G x >= g with x free.  A
certificate is a row vector y = (u, v) with E^T u + G^T v = c, v <= 0 and
e.u + g.v = c.x; weak duality then makes x optimal.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from flint import fmpq, fmpq_mat
from gmpy2 import mpq

from .linalg import EchelonSpace, q, to_fraction

log = logging.getLogger(__name__)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class LPParameterError(ValueError):
    pass


@dataclass
class LinearProgram:
    objective: list[Fraction]
    eq_rows: list[tuple[list[Fraction], Fraction]] = field(default_factory=list)
    ge_rows: list[tuple[list[Fraction], Fraction]] = field(default_factory=list)
    eq_tags: list[str] = field(default_factory=list)
    ge_tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.objective)
        for row, _ in self.eq_rows + self.ge_rows:
            if len(row) != n:
                raise LPParameterError("row length differs from the variable count")
        if not self.eq_tags:
            self.eq_tags = [f"eq{i}" for i in range(len(self.eq_rows))]
        if not self.ge_tags:
            self.ge_tags = [f"ge{i}" for i in range(len(self.ge_rows))]

    @property
    def nvars(self) -> int:
        return len(self.objective)

    @property
    def rows(self) -> list[tuple[list[Fraction], Fraction]]:
        return self.eq_rows + self.ge_rows

    def dump(self) -> str:
        """Plain-text listing (MAX / EQ / GE lines) for regression diffs."""
        fmt = lambda r: " ".join(str(x) for x in r)
        out = [f"MAX {fmt(self.objective)}"]
        for tag, (row, rhs) in zip(self.eq_tags, self.eq_rows):
            out.append(f"EQ {tag} {fmt(row)} = {rhs}")
        for tag, (row, rhs) in zip(self.ge_tags, self.ge_rows):
            out.append(f"GE {tag} {fmt(row)} >= {rhs}")
        return "\n".join(out) + "\n"

    def transformed(self, r: Sequence[Sequence]) -> "LinearProgram":
        """The same program in variables z with x = R z (R square, invertible)."""
        n = self.nvars
        rr = [[Fraction(x) for x in row] for row in r]

        def mul(row):
            return [sum((row[i] * rr[i][j] for i in range(n) if row[i] and rr[i][j]), Fraction(0)) for j in range(n)]

        return LinearProgram(
            mul(self.objective),
            [(mul(a), b) for a, b in self.eq_rows],
            [(mul(a), b) for a, b in self.ge_rows],
            list(self.eq_tags),
            list(self.ge_tags),
        )


@dataclass
class LPSolution:
    status: str
    x: list[Fraction] | None = None
    objective: Fraction | None = None
    dual: list[Fraction] | None = None  # eq rows first, then ge rows
    method: str = "simplex"
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def build_dual_lp(basis, T: int, M: int | None = None) -> LinearProgram:
    """The auxiliary-form program for a SpaceBasis.

    Variables x_j weight the basis forms g^j; a^j_n, b^j_n are the
    coefficients of g^j and of its image g~^j.
    """
    dim = basis.dim
    if M is None:
        M = basis.order
    if not 1 <= T <= dim:
        raise LPParameterError(f"need 1 <= T <= dim = {dim}, got T={T}")
    if not dim <= M <= basis.order:
        raise LPParameterError(f"need dim <= M <= {basis.order}, got M={M}")
    a = [f.series.coeffs for f in basis.forms]
    b = [f.al_image.coeffs for f in basis.forms]
    objective = [b[j][0] for j in range(dim)]
    eq = [([a[j][0] for j in range(dim)], Fraction(1))]
    eq_tags = ["a0=1"]
    for n in range(1, T):
        eq.append(([a[j][n] for j in range(dim)], Fraction(0)))
        eq_tags.append(f"a{n}=0")
    ge, ge_tags = [], []
    for n in range(T, M + 1):
        ge.append(([a[j][n] for j in range(dim)], Fraction(0)))
        ge_tags.append(f"a{n}>=0")
    for n in range(1, M + 1):
        ge.append(([b[j][n] for j in range(dim)], Fraction(0)))
        ge_tags.append(f"b{n}>=0")
    return LinearProgram(objective, eq, ge, eq_tags, ge_tags)


# ---------------------------------------------------------------- simplex


class _Tableau:
    """Dense rational tableau for max c.w, A w = b (b >= 0), w >= 0, with artificials."""

    def __init__(self, a: list[list[mpq]], b: list[mpq], ncols: int):
        m = len(a)
        self.m, self.n = m, ncols
        self.rows = [a[i] + [mpq(1) if j == i else mpq(0) for j in range(m)] + [b[i]] for i in range(m)]
        self.basis = [ncols + i for i in range(m)]
        self.width = ncols + m
        self.pivots = 0

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        inv = 1 / prow[c]
        nz = [j for j in range(self.width + 1) if prow[j]]
        for j in nz:
            prow[j] *= inv
        for i, row in enumerate(self.rows):
            if i != r:
                f = row[c]
                if f:
                    for j in nz:
                        row[j] -= f * prow[j]
        self.basis[r] = c
        self.pivots += 1

    def reduced_costs(self, cost: list[mpq]) -> list[mpq]:
        d = [-cost[j] for j in range(self.width)]
        for i, bj in enumerate(self.basis):
            cb = cost[bj]
            if cb:
                row = self.rows[i]
                for j in range(self.width):
                    if row[j]:
                        d[j] += cb * row[j]
        return d

    def run(self, cost: list[mpq], allowed: int, stall_limit: int = 50) -> str:
        """Simplex on columns < allowed; returns optimal or unbounded.

        Dantzig pricing until ``stall_limit`` consecutive degenerate pivots,
        then Bland's least-index rule for the rest of the run (which
        guarantees termination).
        """
        d = self.reduced_costs(cost)
        bland = False
        stall = 0
        while True:
            if bland:
                c = next((j for j in range(allowed) if d[j] < 0), None)
            else:
                c, best_d = None, mpq(0)
                for j in range(allowed):
                    if d[j] < best_d:
                        c, best_d = j, d[j]
            if c is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                if row[c] > 0:
                    ratio = row[-1] / row[c]
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            if best[0][0] == 0:
                stall += 1
                if stall >= stall_limit:
                    bland = True
            else:
                stall = 0
            r = best[1]
            f = d[c]
            self.pivot(r, c)
            prow = self.rows[r]
            for j in range(self.width):
                if prow[j]:
                    d[j] -= f * prow[j]
            d[c] = mpq(0)

    def values(self) -> list[mpq]:
        w = [mpq(0)] * self.width
        for i, bj in enumerate(self.basis):
            w[bj] = self.rows[i][-1]
        return w


def _two_phase(a: list[list[mpq]], b: list[mpq], cost: list[mpq]):
    """max cost.w, a w = b, w >= 0.  Returns (status, w, multipliers pi, pivots).

    pi = c_B B^{-1} is read from the reduced costs of the artificial columns.
    """
    m, ncols = len(a), len(cost)
    flip = []
    a2, b2 = [], []
    for row, rhs in zip(a, b):
        if rhs < 0:
            a2.append([-x for x in row])
            b2.append(-rhs)
            flip.append(-1)
        else:
            a2.append(list(row))
            b2.append(rhs)
            flip.append(1)
    tab = _Tableau(a2, b2, ncols)
    tab.run([mpq(0)] * ncols + [mpq(-1)] * m, ncols)
    if sum(tab.values()[ncols:]) != 0:
        return INFEASIBLE, None, None, tab.pivots
    for i in range(m):
        if tab.basis[i] >= ncols:
            c = next((j for j in range(ncols) if tab.rows[i][j]), None)
            if c is not None:
                tab.pivot(i, c)
    full = list(cost) + [mpq(0)] * m
    status = tab.run(full, ncols)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None, tab.pivots
    w = tab.values()[:ncols]
    d = tab.reduced_costs(full)
    pi = [d[ncols + i] * flip[i] for i in range(m)]
    return OPTIMAL, w, pi, tab.pivots


def simplex_solve(lp: LinearProgram) -> LPSolution:
    """Exact simplex, run on the dual program so the tableau has one row per variable.

    The dual is  max -e.u + g.w  s.t.  E^T u - G^T w = c,  w >= 0,  u free
    (split as u+ - u-).  Its simplex multipliers pi give the primal optimum
    x = -pi, and (u, -w) is the certificate.
    """
    a, rhs, cost = _dual_program(lp)
    status, w, pi, piv = _two_phase(a, rhs, cost)
    if status == UNBOUNDED:
        return LPSolution(INFEASIBLE, pivots=piv)
    if status == INFEASIBLE:
        # no certificate exists: the primal is unbounded or infeasible
        return LPSolution(_primal_status_without_dual(lp), pivots=piv)
    sol = _solution_from_dual(lp, w, pi, piv, "simplex")
    if not verify_certificate(lp, sol):
        raise AssertionError("simplex produced an invalid certificate")
    return sol


def _dual_program(lp: LinearProgram):
    """Columns u+_i, u-_i for eq rows, then w_l for ge rows; one row per primal variable."""
    n = lp.nvars
    cols, cost = [], []
    for row, rhs in lp.eq_rows:
        r = [q(x) for x in row]
        cols.append(r)
        cost.append(-q(rhs))
        cols.append([-x for x in r])
        cost.append(q(rhs))
    for row, rhs in lp.ge_rows:
        cols.append([-q(x) for x in row])
        cost.append(q(rhs))
    a = [[col[i] for col in cols] for i in range(n)]
    return a, [q(x) for x in lp.objective], cost


def _solution_from_dual(lp, w, pi, pivots, method) -> LPSolution:
    neq, nge = len(lp.eq_rows), len(lp.ge_rows)
    x = [to_fraction(-v) for v in pi]
    y = [to_fraction(w[2 * i] - w[2 * i + 1]) for i in range(neq)]
    y += [to_fraction(-w[2 * neq + l]) for l in range(nge)]
    return LPSolution(OPTIMAL, x, _dot(lp.objective, x), y, method, pivots)


def _primal_status_without_dual(lp: LinearProgram) -> str:
    """Phase one on the primal (x split, slacks for ge rows)."""
    n = lp.nvars
    nge = len(lp.ge_rows)
    a, b = [], []
    for i, (row, rhs) in enumerate(lp.rows):
        r = [q(x) for x in row]
        full = r + [-x for x in r] + [mpq(0)] * nge
        if i >= len(lp.eq_rows):
            full[2 * n + i - len(lp.eq_rows)] = mpq(-1)
        a.append(full)
        b.append(q(rhs))
    status, _, _, _ = _two_phase(a, b, [mpq(0)] * (2 * n + nge))
    return UNBOUNDED if status == OPTIMAL else INFEASIBLE


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), Fraction(0))


def verify_certificate(lp: LinearProgram, sol: LPSolution) -> bool:
    """Exact check of primal feasibility, dual feasibility and zero duality gap."""
    if sol.status != OPTIMAL or sol.x is None or sol.dual is None:
        return False
    x, y = sol.x, sol.dual
    if len(x) != lp.nvars or len(y) != len(lp.rows):
        return False
    for row, rhs in lp.eq_rows:
        if _dot(row, x) != rhs:
            return False
    for row, rhs in lp.ge_rows:
        if _dot(row, x) < rhs:
            return False
    neq = len(lp.eq_rows)
    if any(v > 0 for v in y[neq:]):
        return False
    rows = lp.rows
    for j in range(lp.nvars):
        if sum((y[i] * rows[i][0][j] for i in range(len(rows)) if y[i]), Fraction(0)) != lp.objective[j]:
            return False
    dual_obj = sum((y[i] * rows[i][1] for i in range(len(rows)) if y[i]), Fraction(0))
    primal_obj = _dot(lp.objective, x)
    if sol.objective is not None and sol.objective != primal_obj:
        return False
    return dual_obj == primal_obj


# ---------------------------------------------------------------- revised simplex


def _fq(x) -> fmpq:
    x = Fraction(x)
    return fmpq(x.numerator, x.denominator)


def _fr(x: fmpq) -> Fraction:
    return Fraction(int(x.p), int(x.q))


class RowBasisSimplex:
    """Exact vertex simplex for the primal, over bases of n linearly independent rows.

    A basis B fixes the vertex x = B^-1 g_B and the multipliers y with
    B^T y = c.  Starting anywhere, violated rows are first shifted so that
    x is feasible; primal pivots then make y feasible, and after the shift
    is removed dual pivots restore feasibility of x.  Both phases use
    Dantzig pricing and switch to least-index rules after ``stall_limit``
    degenerate steps.
    """

    def __init__(self, lp: LinearProgram, stall_limit: int = 50):
        self.lp = lp
        self.n = lp.nvars
        self.neq = len(lp.eq_rows)
        rows = lp.rows
        self.m = len(rows)
        self.a = [[_fq(v) for v in row] for row, _ in rows]
        self.g = [_fq(v) for _, v in rows]
        self.amat = fmpq_mat(self.m, self.n, [v for row in self.a for v in row])
        self.c = fmpq_mat(1, self.n, [_fq(v) for v in lp.objective])
        self.stall_limit = stall_limit
        self.pivots = 0

    def initial_basis(self, preferred: Sequence[int] = ()) -> list[int] | None:
        """Independent eq rows, then ``preferred`` rows, then any rows, up to rank n."""
        sp = EchelonSpace(self.n)
        chosen = []
        order = list(range(self.neq)) + [i for i in preferred if i >= self.neq]
        order += [i for i in range(self.neq, self.m) if i not in set(order)]
        for i in order:
            if len(chosen) == self.n:
                break
            if sp.add(self.lp.rows[i][0]):
                chosen.append(i)
        return chosen if len(chosen) == self.n else None

    def _refresh(self):
        self.x = self.binv * fmpq_mat(self.n, 1, [self.gcur[i] for i in self.basis])
        self.y = self.c * self.binv
        ax = self.amat * self.x
        self.slack = [ax[i, 0] - self.gcur[i] for i in range(self.m)]

    def _replace(self, p: int, j: int):
        """Sherman-Morrison update for basis position p taking row j."""
        n = self.n
        col = fmpq_mat(n, 1, [self.binv[i, p] for i in range(n)])
        diff = fmpq_mat(1, n, [self.a[j][k] - self.a[self.basis[p]][k] for k in range(n)])
        u = diff * self.binv
        denom = (fmpq_mat(1, n, self.a[j]) * col)[0, 0]
        self.binv = self.binv - (col * u) * (1 / denom)
        self.basis[p] = j
        self.inbasis = set(self.basis)
        self.pivots += 1

    def solve(self, basis: Sequence[int], max_pivots: int = 100000) -> LPSolution | None:
        """Optimize from ``basis``; None when this method cannot decide (fallback needed)."""
        self.basis = list(basis)
        self.inbasis = set(self.basis)
        try:
            self.binv = fmpq_mat(self.n, self.n, [v for i in self.basis for v in self.a[i]]).inv()
        except ZeroDivisionError:
            return None
        self.gcur = list(self.g)
        self._refresh()
        for i in range(self.neq):
            if i not in self.inbasis and self.slack[i] != 0:
                return LPSolution(INFEASIBLE, method="revised", pivots=self.pivots)
        shifted = False
        for i in range(self.neq, self.m):
            if self.slack[i] < 0:
                self.gcur[i] += self.slack[i]
                self.slack[i] = fmpq(0)
                shifted = True
        if self._primal(max_pivots) != OPTIMAL:
            return None
        if shifted:
            self.gcur = list(self.g)
            self._refresh()
            status = self._dual(max_pivots)
            if status == INFEASIBLE:
                return LPSolution(INFEASIBLE, method="revised", pivots=self.pivots)
            if status != OPTIMAL:
                return None
        x = [_fr(self.x[i, 0]) for i in range(self.n)]
        dual = [Fraction(0)] * self.m
        for p, i in enumerate(self.basis):
            dual[i] = _fr(self.y[0, p])
        return LPSolution(OPTIMAL, x, _dot(self.lp.objective, x), dual, "revised", self.pivots)

    def _primal(self, max_pivots: int) -> str:
        bland, stall = False, 0
        while self.pivots < max_pivots:
            cands = [p for p, i in enumerate(self.basis) if i >= self.neq and self.y[0, p] > 0]
            if not cands:
                return OPTIMAL
            if bland:
                p = min(cands, key=lambda p: self.basis[p])
            else:
                p = max(cands, key=lambda p: (self.y[0, p], -self.basis[p]))
            d = fmpq_mat(self.n, 1, [self.binv[i, p] for i in range(self.n)])
            ad = self.amat * d
            best = None
            for j in range(self.neq, self.m):
                if j not in self.inbasis and ad[j, 0] < 0:
                    key = (self.slack[j] / -ad[j, 0], j)
                    if best is None or key < best:
                        best = key
            if best is None:
                return UNBOUNDED
            t, j = best
            stall = stall + 1 if t == 0 else 0
            bland = bland or stall >= self.stall_limit
            self._replace(p, j)
            self._refresh()
        return "limit"

    def _dual(self, max_pivots: int) -> str:
        bland, stall = False, 0
        while self.pivots < max_pivots:
            viol = [j for j in range(self.neq, self.m) if j not in self.inbasis and self.slack[j] < 0]
            if not viol:
                return OPTIMAL
            j = min(viol) if bland else min(viol, key=lambda j: (self.slack[j], j))
            alpha = fmpq_mat(1, self.n, self.a[j]) * self.binv
            best = None
            for p, i in enumerate(self.basis):
                if i >= self.neq and alpha[0, p] > 0:
                    key = (-self.y[0, p] / alpha[0, p], i, p)
                    if best is None or key < best:
                        best = key
            if best is None:
                return INFEASIBLE
            stall = stall + 1 if best[0] == 0 else 0
            bland = bland or stall >= self.stall_limit
            self._replace(best[2], j)
            self._refresh()
        return "limit"


# ---------------------------------------------------------------- float presolve


def _geometric_scaling(a, sweeps: int = 20):
    """Row and column factors making the nonzero |a_ij| r_i c_j cluster around 1."""
    import numpy as np

    mag = np.abs(a)
    nz = mag > 0
    r = np.ones(a.shape[0])
    c = np.ones(a.shape[1])
    for _ in range(sweeps):
        for axis in (1, 0):
            b = mag * c[None, :] * r[:, None]
            hi = np.where(nz, b, 0).max(axis=axis)
            lo = np.where(nz, b, np.inf).min(axis=axis)
            ok = hi > 0
            f = r if axis == 1 else c
            f[ok] /= np.sqrt(hi[ok] * lo[ok])
    # finish with row equilibration so every row has max entry 1
    hi = (mag * c[None, :] * r[:, None]).max(axis=1)
    r[hi > 0] /= hi[hi > 0]
    return r, c


def _float_solve(lp: LinearProgram, tol: float = 1e-9):
    """HiGHS on a geometrically scaled copy; (slack, |marginal|) per ge row, or None."""
    import numpy as np
    from scipy.optimize import linprog

    n, neq = lp.nvars, len(lp.eq_rows)
    if not lp.rows:
        return None
    a = np.array([[float(x) for x in r] for r, _ in lp.rows], dtype=float)
    rhs = np.array([float(v) for _, v in lp.rows], dtype=float)
    r, c = _geometric_scaling(a)
    a = a * r[:, None] * c[None, :]
    rhs = rhs * r
    kw = {}
    if neq:
        kw["A_eq"], kw["b_eq"] = a[:neq], rhs[:neq]
    if len(a) > neq:
        kw["A_ub"], kw["b_ub"] = -a[neq:], -rhs[neq:]
    obj = -np.array([float(v) for v in lp.objective]) * c
    opts = {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol}
    res = linprog(obj, bounds=[(None, None)] * n, method="highs-ds", options=opts, **kw)
    if res.status != 0:
        return None
    if len(a) == neq:
        return np.zeros(0), np.zeros(0)
    return res.ineqlin.residual, np.abs(res.ineqlin.marginals)


def float_presolve_and_rationalize(lp: LinearProgram, precision: int = 53, tol: float = 1e-7) -> LPSolution:
    """Float solve, exact warm-started simplex from its active set, exact certificate.

    ``precision`` is accepted for interface compatibility; the float stage
    runs in IEEE double.  If the float side fails the exact solvers run
    cold: the row-basis simplex first, the tableau simplex last.
    """
    try:
        sol = _rationalize(lp, tol)
    except Exception as exc:  # any float-side trouble means fall back
        log.debug("float presolve failed: %s", exc)
        sol = None
    if sol is not None and (sol.status != OPTIMAL or verify_certificate(lp, sol)):
        return sol
    log.info("float presolve unusable; solving exactly from a cold start")
    solver = RowBasisSimplex(lp)
    basis = solver.initial_basis()
    out = solver.solve(basis) if basis is not None else None
    if out is None or (out.optimal and not verify_certificate(lp, out)):
        out = simplex_solve(lp)
    out.method = "simplex-fallback"
    return out


def _rationalize(lp: LinearProgram, tol: float) -> LPSolution | None:
    fl = _float_solve(lp)
    if fl is None:
        return None
    slack, marg = fl
    neq = len(lp.eq_rows)
    active = [i for i in range(len(slack)) if slack[i] <= tol]
    active.sort(key=lambda i: (-marg[i], slack[i], i))
    solver = RowBasisSimplex(lp)
    basis = solver.initial_basis([neq + i for i in active])
    if basis is None:
        return None
    sol = solver.solve(basis)
    if sol is None:
        return None
    sol.method = "float-presolve" if solver.pivots == 0 else "float-crossover"
    return sol
