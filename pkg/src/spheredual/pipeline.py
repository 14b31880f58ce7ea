"""End-to-end dual bound: basis, LP, positivity certificates, report."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .eigenforms import EigenformData, compute_eigen_data, load_eigen
from .linalg import EchelonSpace, to_fraction
from .lp import LinearProgram, LPParameterError, LPSolution, build_dual_lp, float_presolve_and_rationalize, verify_certificate
from .modspace import SpaceBasis, assemble_basis, check_level_admissible, load_basis
from .positivity import (
    PositivityCertificate,
    certify_nonnegative,
    certify_residue_refined,
    cusp_bound_Cg,
    growth_constant,
    split_parts,
)

log = logging.getLogger(__name__)

CERTIFIED_STATUS = "certified"
FAILED_CERTIFICATION = "failed-certification"
INFEASIBLE_STATUS = "infeasible"
ERROR_STATUS = "error"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int
    level: int = 1
    T: int | None = None
    t_range: tuple[int, int] | None = None
    truncation: int | None = None
    sources: tuple[str, ...] = ("eisenstein", "eta-search")
    basis_file: str | None = None
    eigen_file: str | None = None
    digits: int = 6
    jobs: int = 1
    certify: bool = True
    scale: Fraction | None = None

    @property
    def weight(self) -> int:
        return self.dim // 2

    def validate(self) -> None:
        if self.dim <= 0 or self.dim % 4:
            raise ConfigError(f"dimension must be a positive multiple of 4, got {self.dim}")
        if self.weight < 4:
            raise ConfigError("weight 2 (d = 4) is not supported")
        if not check_level_admissible(self.level):
            raise ConfigError(f"level {self.level} is not admissible")
        if self.T is None and self.t_range is None:
            raise ConfigError("need T or a T range")
        if self.T is not None and self.T < 1:
            raise ConfigError("T must be positive")
        if self.t_range is not None and not 1 <= self.t_range[0] <= self.t_range[1]:
            raise ConfigError(f"bad T range {self.t_range}")
        if self.digits < 0:
            raise ConfigError("digits must be nonnegative")

    def with_T(self, T: int) -> "RunConfig":
        out = RunConfig(**{f: getattr(self, f) for f in self.__dataclass_fields__})
        out.T, out.t_range = T, None
        return out


@dataclass
class DualDistribution:
    """Point masses sum a_n delta_{sqrt n} and its transform sum c b_n delta_{2 sqrt(n/N)}.

    Radii are stored squared so they stay rational; ``scale`` multiplies
    primal radii and divides dual radii.
    """

    primal: list[tuple[Fraction, Fraction]]
    dual: list[tuple[Fraction, Fraction]]
    scale: Fraction | None = None

    def radius_squared(self, side: str, i: int) -> Fraction:
        r2, _ = (self.primal if side == "primal" else self.dual)[i]
        if self.scale is None:
            return r2
        lam2 = Fraction(self.scale) ** 2
        return r2 * lam2 if side == "primal" else r2 / lam2


@dataclass
class BoundReport:
    d: int
    N: int
    T: int
    M: int
    status: str
    x: list[Fraction] = field(default_factory=list)
    b0: Fraction | None = None
    bound: Fraction | None = None
    sqrt_power: int = 0  # bound = value * sqrt(N)^sqrt_power; always 0 for even k
    digits: int = 6
    cert_g: PositivityCertificate | None = None
    cert_gt: PositivityCertificate | None = None
    method: str = ""
    reason: str = ""
    seconds: float = 0.0
    distribution: DualDistribution | None = None

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED_STATUS

    @property
    def decimal(self) -> str:
        return "" if self.bound is None else round_down(self.bound, self.digits)

    @property
    def c(self) -> Fraction:
        """(2/sqrt N)^k as an exact rational (k = d/2 is even)."""
        k = self.d // 2
        return Fraction(2**k, self.N ** (k // 2))


def round_down(x: Fraction, digits: int = 6) -> str:
    """Decimal string of x truncated toward -infinity at ``digits`` places."""
    x = Fraction(x)
    scaled = (x.numerator * 10**digits) // x.denominator
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    if digits == 0:
        return f"{sign}{scaled}"
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def bound_value(b0: Fraction, d: int, N: int, T: int) -> Fraction:
    """b0 (2/sqrt N)^(d/2) (sqrt T / 2)^d = b0 T^k / (2^k N^(k/2)), k = d/2 even."""
    k = d // 2
    if k % 2:
        raise ValueError("odd weight gives an irrational bound; not supported")
    return Fraction(b0) * Fraction(T**k, 2**k * N ** (k // 2))


# ---------------------------------------------------------------- inputs


def load_inputs(cfg: RunConfig) -> tuple[SpaceBasis, EigenformData | None]:
    """Basis (assembled or ingested) and eigenform data if a file is given."""
    k, N = cfg.weight, cfg.level
    if cfg.basis_file:
        basis = load_basis(cfg.basis_file)
        if (basis.weight, basis.level) != (k, N):
            raise ConfigError(f"basis file is for k={basis.weight}, N={basis.level}; expected k={k}, N={N}")
    else:
        basis = assemble_basis(k, N, cfg.truncation, cfg.sources)
    if cfg.truncation is not None and cfg.truncation > basis.order:
        basis = basis.extended(cfg.truncation)
    eigen = load_eigen(cfg.eigen_file) if cfg.eigen_file else None
    return basis, eigen


def echelon_transform(basis: SpaceBasis) -> list[list[Fraction]]:
    """R with x = R z, where z are coordinates on the reduced echelon basis.

    The LP is far better conditioned in these coordinates: each variable
    then owns one leading coefficient.
    """
    sp = EchelonSpace(basis.order + 1)
    for f in basis.forms:
        sp.add(f.series.coeffs)
    n = basis.dim
    P = [[to_fraction(sp.combos[i].get(j, 0)) for j in range(n)] for i in range(n)]
    return [[P[j][i] for j in range(n)] for i in range(n)]


def solve_lp(lp: LinearProgram, basis: SpaceBasis) -> LPSolution:
    """Float presolve plus exact solve in echelon coordinates, mapped back to basis coordinates."""
    R = echelon_transform(basis)
    sol = float_presolve_and_rationalize(lp.transformed(R))
    if not sol.optimal:
        return sol
    n = basis.dim
    x = [sum((R[i][j] * sol.x[j] for j in range(n) if R[i][j] and sol.x[j]), Fraction(0)) for i in range(n)]
    # x = R z keeps the row multipliers valid for the original program
    out = LPSolution(sol.status, x, sol.objective, sol.dual, sol.method, sol.pivots)
    if not verify_certificate(lp, out):
        raise AssertionError("certificate failed after the change of variables")
    return out


def certify_pair(x: Sequence[Fraction], basis: SpaceBasis, eigen: EigenformData | None, extra_scan: int = 0):
    """Certificates for g (coordinates x) and g~ (coordinates W x).

    When the plain Eisenstein floor vanishes on some residue classes the
    residue-refined variant is tried; its method field says so.
    """
    if eigen is None:
        eigen = compute_eigen_data(basis)
    out = []
    for coords in (list(x), basis.al_coordinates(x)):
        cert = certify_nonnegative(None, basis, eigen, extra_scan, coords=coords)
        if not cert.certified and cert.zero_classes and cert.r_g is not None and cert.r_g == 0:
            refined = certify_residue_refined(None, basis, eigen, extra_scan, coords=coords)
            if refined.certified:
                cert = refined
        out.append(cert)
    return out[0], out[1]


def pair_growth(x: Sequence[Fraction], basis: SpaceBasis, eigen: EigenformData) -> Fraction:
    """A with |a_n|, |b_n| <= A n^(k-1) for the pair (g, g~)."""
    best = Fraction(0)
    for coords in (list(x), basis.al_coordinates(x)):
        parts = split_parts(None, basis, coords)
        best = max(best, growth_constant(parts, cusp_bound_Cg(parts.g_c, eigen)))
    return best


# ---------------------------------------------------------------- reports


def compute_dual_bound(
    cfg: RunConfig,
    basis: SpaceBasis | None = None,
    eigen: EigenformData | None = None,
) -> BoundReport:
    cfg.validate()
    if cfg.T is None:
        raise ConfigError("compute_dual_bound needs a single T")
    start = time.time()
    if basis is None:
        basis, eigen = load_inputs(cfg)
    M = cfg.truncation if cfg.truncation is not None else basis.order
    rep = BoundReport(cfg.dim, cfg.level, cfg.T, M, ERROR_STATUS, digits=cfg.digits)
    try:
        lp = build_dual_lp(basis, cfg.T, M)
    except LPParameterError as exc:
        rep.reason = f"lp: {exc}"
        return rep
    sol = solve_lp(lp, basis)
    rep.method = sol.method
    if not sol.optimal:
        rep.status = INFEASIBLE_STATUS if sol.status == "infeasible" else ERROR_STATUS
        rep.reason = f"lp: {sol.status}"
        rep.seconds = time.time() - start
        return rep
    rep.x = sol.x
    rep.b0 = sol.objective
    rep.bound = bound_value(sol.objective, cfg.dim, cfg.level, cfg.T)
    rep.distribution = emit_dual_distribution(rep, basis, cfg.scale)
    if cfg.certify:
        if eigen is None:
            eigen = compute_eigen_data(basis)
        rep.cert_g, rep.cert_gt = certify_pair(sol.x, basis, eigen)
        ok = rep.cert_g.certified and rep.cert_gt.certified
        rep.status = CERTIFIED_STATUS if ok else FAILED_CERTIFICATION
        if not ok:
            bad = [f"{nm}: {c.reason}" for nm, c in (("g", rep.cert_g), ("g~", rep.cert_gt)) if not c.certified]
            rep.reason = "; ".join(bad)
    else:
        rep.status = FAILED_CERTIFICATION
        rep.reason = "certification skipped"
    rep.seconds = time.time() - start
    return rep


def emit_dual_distribution(rep: BoundReport, basis: SpaceBasis, scale: Fraction | None = None) -> DualDistribution:
    g = basis.combine(rep.x)
    gt = basis.combine_al(rep.x)
    c = rep.c
    primal = [(Fraction(n), g[n]) for n in range(rep.M + 1) if g[n] > 0]
    dual = [(Fraction(4 * n, rep.N), c * gt[n]) for n in range(rep.M + 1) if gt[n] != 0]
    return DualDistribution(primal, dual, scale)


def _scan_worker(args):
    cfg, basis, eigen = args
    try:
        return compute_dual_bound(cfg, basis, eigen)
    except Exception as exc:  # per-T failures are recorded, not fatal
        return BoundReport(cfg.dim, cfg.level, cfg.T, cfg.truncation or basis.order, ERROR_STATUS, reason=f"{type(exc).__name__}: {exc}")


@dataclass
class ScanResult:
    reports: list[BoundReport]

    @property
    def best(self) -> BoundReport | None:
        ok = [r for r in self.reports if r.certified]
        return max(ok, key=lambda r: (r.bound, -r.T)) if ok else None

    @property
    def failures(self) -> list[BoundReport]:
        return [r for r in self.reports if not r.certified]


def scan_T(cfg: RunConfig, basis: SpaceBasis | None = None, eigen: EigenformData | None = None) -> ScanResult:
    cfg.validate()
    if basis is None:
        basis, eigen = load_inputs(cfg)
    if eigen is None and cfg.certify:
        eigen = compute_eigen_data(basis)
    lo, hi = cfg.t_range if cfg.t_range is not None else (cfg.T, cfg.T)
    tasks = [(cfg.with_T(T), basis, eigen) for T in range(lo, hi + 1)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            reports = list(pool.map(_scan_worker, tasks))
    else:
        reports = [_scan_worker(t) for t in tasks]
    reports.sort(key=lambda r: (r.N, r.T))
    return ScanResult(reports)


# ---------------------------------------------------------------- machine format


def _fmt(v: Fraction) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _cert_fields(prefix: str, c: PositivityCertificate | None) -> list[str]:
    if c is None:
        return [f"{prefix}=none"]
    out = [f"{prefix}={c.verdict}", f"{prefix}.method={c.method}"]
    for name, val in (("C_g", c.C_g), ("r_g", c.r_g)):
        out.append(f"{prefix}.{name}=" + ("none" if val is None else _fmt(val)))
    out.append(f"{prefix}.Q=" + ("none" if c.Q is None else str(c.Q)))
    out.append(f"{prefix}.scanned_to={c.scanned_to}")
    out.append(f"{prefix}.zero_classes=" + ",".join(str(z) for z in c.zero_classes))
    out.append(f"{prefix}.reason={c.reason}")
    return out


def report_to_machine(rep: BoundReport) -> str:
    lines = [
        f"d={rep.d}",
        f"N={rep.N}",
        f"T={rep.T}",
        f"M={rep.M}",
        f"status={rep.status}",
        "x=" + ",".join(_fmt(v) for v in rep.x),
        "b0=" + ("none" if rep.b0 is None else _fmt(rep.b0)),
        "bound=" + ("none" if rep.bound is None else _fmt(rep.bound)),
        f"sqrt_power={rep.sqrt_power}",
        f"digits={rep.digits}",
        f"decimal={rep.decimal}",
        f"method={rep.method}",
        f"reason={rep.reason}",
    ]
    lines += _cert_fields("cert_g", rep.cert_g)
    lines += _cert_fields("cert_gt", rep.cert_gt)
    return "\n".join(lines) + "\n"


def _opt_frac(v: str) -> Fraction | None:
    return None if v == "none" else Fraction(v)


def _parse_cert(f: dict, prefix: str) -> PositivityCertificate | None:
    if f[prefix] == "none":
        return None
    zc = f[f"{prefix}.zero_classes"]
    Q = f[f"{prefix}.Q"]
    return PositivityCertificate(
        _opt_frac(f[f"{prefix}.C_g"]),
        _opt_frac(f[f"{prefix}.r_g"]),
        None if Q == "none" else int(Q),
        int(f[f"{prefix}.scanned_to"]),
        f[prefix],
        f[f"{prefix}.reason"],
        [int(z) for z in zc.split(",")] if zc else [],
        f[f"{prefix}.method"],
    )


def report_from_machine(text: str) -> BoundReport:
    f: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"malformed record line: {line!r}")
        f[key] = val
    derived = f.pop("decimal", None)
    rep = BoundReport(
        int(f["d"]),
        int(f["N"]),
        int(f["T"]),
        int(f["M"]),
        f["status"],
        [Fraction(v) for v in f["x"].split(",")] if f["x"] else [],
        _opt_frac(f["b0"]),
        _opt_frac(f["bound"]),
        int(f["sqrt_power"]),
        int(f["digits"]),
        _parse_cert(f, "cert_g"),
        _parse_cert(f, "cert_gt"),
        f["method"],
        f["reason"],
    )
    if derived is not None and derived != rep.decimal:
        raise ValueError("decimal field disagrees with the exact bound")
    return rep


def report_to_text(rep: BoundReport) -> str:
    out = [f"d={rep.d} N={rep.N} T={rep.T} M={rep.M}: {rep.status}"]
    if rep.bound is not None:
        out.append(f"  bound  = {_fmt(rep.bound)}  ({rep.decimal}, rounded down)")
        out.append(f"  b0     = {_fmt(rep.b0)}")
        out.append("  x      = (" + ", ".join(_fmt(v) for v in rep.x) + ")")
        out.append(f"  solver = {rep.method}")
    for name, c in (("g", rep.cert_g), ("g~", rep.cert_gt)):
        if c is None:
            continue
        if c.certified:
            out.append(f"  {name:<2} certified ({c.method}): C_g={_fmt(c.C_g)} r_g={_fmt(c.r_g)} Q={c.Q}")
        else:
            out.append(f"  {name:<2} {c.verdict}: {c.reason}")
    if rep.reason:
        out.append(f"  note: {rep.reason}")
    return "\n".join(out) + "\n"
