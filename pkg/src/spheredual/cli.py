"""Command-line interface: spheredual bound|scan|certify|verify-summation|basis|version."""
from __future__ import annotations

import argparse
import logging
import re
import sys
from fractions import Fraction

from . import __version__
from .linalg import EchelonSpace, NotInSpan, to_fraction
from .modspace import BasisFileError, DeferToIngestion, IncompleteBasis, MissingAtkinLehner, assemble_basis, load_basis, save_basis, sturm_bound
from .pipeline import (
    ConfigError,
    RunConfig,
    certify_pair,
    compute_dual_bound,
    load_inputs,
    pair_growth,
    report_to_machine,
    report_to_text,
    scan_T,
)
from .eigenforms import compute_eigen_data
from .positivity import certify_nonnegative
from .summation import summation_check

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
SUMMATION_ORDER = 200


class UsageError(Exception):
    pass


def _t_range(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _widths(text: str) -> list[Fraction]:
    try:
        out = [Fraction(w) for w in text.split(",") if w.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not out or any(w <= 0 for w in out):
        raise argparse.ArgumentTypeError("widths must be positive rationals")
    return out


def _fraction_list(text: str) -> list[Fraction]:
    try:
        return [Fraction(v) for v in re.split(r"[,\s]+", text.strip()) if v]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _common(p: argparse.ArgumentParser, need_t: bool = False) -> None:
    p.add_argument("--dim", type=int, required=True, help="dimension d (a multiple of 4)")
    p.add_argument("--level", type=int, default=1, help="level N")
    if need_t:
        p.add_argument("--min-norm", type=int, dest="T", help="T (vectors of norm < T are excluded)")
    p.add_argument("--truncation", type=int, help="truncation order M (default max(2 dim, Sturm bound))")
    p.add_argument("--basis-file", help="ingest the basis from an MKBASIS file")
    p.add_argument("--eigen-file", help="ingest eigenform data from an EIGEN file")
    p.add_argument("--precision", type=int, default=6, help="decimal places for rounded-down output")
    p.add_argument("--output", choices=("text", "machine"), default="text")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spheredual", description="Certified dual LP bounds for sphere packing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="solve one (d, N, T) instance and certify it")
    _common(p, need_t=True)
    p.add_argument("--scale", type=Fraction, help="display scale lambda for the dual distribution")
    p.add_argument("--distribution", action="store_true", help="also list the dual distribution")

    p = sub.add_parser("scan", help="solve a range of T values")
    _common(p)
    p.add_argument("--t", type=_t_range, required=True, dest="t_range", help="T range a..b")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("certify", help="positivity certificates for g and g~")
    _common(p, need_t=True)
    p.add_argument("--coords", type=_fraction_list, help="basis coordinates of g instead of the LP optimum")
    p.add_argument("--series", type=_fraction_list, help="leading coefficients of g (at least to the Sturm bound)")
    p.add_argument("--plain", action="store_true", help="skip the residue-class refinement")
    p.add_argument("--extra-scan", type=int, default=0)

    p = sub.add_parser("verify-summation", help="numerical check of the summation identity")
    _common(p, need_t=True)
    p.add_argument("--widths", type=_widths, default=[Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)])

    p = sub.add_parser("basis", help="make or check basis files")
    bsub = p.add_subparsers(dest="basis_command", required=True)
    q = bsub.add_parser("make")
    q.add_argument("--dim", type=int, required=True)
    q.add_argument("--level", type=int, default=1)
    q.add_argument("--truncation", type=int)
    q.add_argument("--out", required=True)
    q.add_argument("-v", "--verbose", action="store_true")
    q = bsub.add_parser("check")
    q.add_argument("path")
    q.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("version")
    return ap


def _config(args, **extra) -> RunConfig:
    cfg = RunConfig(
        dim=args.dim,
        level=args.level,
        T=getattr(args, "T", None),
        t_range=getattr(args, "t_range", None),
        truncation=args.truncation,
        basis_file=args.basis_file,
        eigen_file=args.eigen_file,
        digits=args.precision,
        jobs=getattr(args, "jobs", 1),
        **extra,
    )
    cfg.validate()
    return cfg


def _need_T(args) -> None:
    if args.T is None:
        raise UsageError("--min-norm is required")


def cmd_bound(args, out) -> int:
    _need_T(args)
    cfg = _config(args, scale=args.scale)
    rep = compute_dual_bound(cfg)
    out.write(report_to_machine(rep) if args.output == "machine" else report_to_text(rep))
    if args.distribution and rep.distribution is not None:
        dist = rep.distribution
        for i, (_, a) in enumerate(dist.primal):
            out.write(f"primal r^2={dist.radius_squared('primal', i)} coeff={a}\n")
        for i, (_, b) in enumerate(dist.dual):
            out.write(f"dual r^2={dist.radius_squared('dual', i)} coeff={b}\n")
    return EXIT_OK if rep.certified else EXIT_FAILED


def cmd_scan(args, out) -> int:
    cfg = _config(args)
    res = scan_T(cfg)
    for rep in res.reports:
        if args.output == "machine":
            out.write(report_to_machine(rep) + "\n")
        else:
            dec = rep.decimal or "-"
            out.write(f"T={rep.T:<3} {rep.status:<22} {dec}  {rep.reason}\n")
    best = res.best
    if best is None:
        out.write("best=none\n")
        return EXIT_FAILED
    out.write(f"best T={best.T} bound={best.decimal}\n" if args.output == "text" else f"best_T={best.T}\n")
    return EXIT_OK


def _coords_from_prefix(basis, coeffs: list[Fraction]) -> list[Fraction]:
    L = min(len(coeffs) - 1, basis.order)
    if L < sturm_bound(basis.weight, basis.level):
        raise UsageError(f"need coefficients up to q^{sturm_bound(basis.weight, basis.level)} (the Sturm bound)")
    sp = EchelonSpace(L + 1)
    for f in basis.forms:
        sp.add(f.series.coeffs[: L + 1])
    try:
        x = [to_fraction(c) for c in sp.coords(coeffs[: L + 1])]
    except NotInSpan as exc:
        raise UsageError("series is not in M_k(Gamma0(N))") from exc
    g = basis.combine(x)
    if any(g[n] != coeffs[n] for n in range(min(len(coeffs), basis.order + 1))):
        raise UsageError("series is not in M_k(Gamma0(N))")
    return x


def cmd_certify(args, out) -> int:
    if args.coords is None and args.series is None:
        _need_T(args)
    elif args.T is None:
        args.T = 1  # unused: the form is given directly
    cfg = _config(args)
    basis, eigen = load_inputs(cfg)
    if eigen is None:
        eigen = compute_eigen_data(basis)
    if args.series is not None:
        x = _coords_from_prefix(basis, args.series)
    elif args.coords is not None:
        if len(args.coords) != basis.dim:
            raise UsageError(f"need {basis.dim} coordinates, got {len(args.coords)}")
        x = args.coords
    else:
        rep = compute_dual_bound(cfg, basis, eigen)
        if not rep.x:
            out.write(report_to_text(rep))
            return EXIT_FAILED
        x = rep.x
    if args.plain:
        certs = [certify_nonnegative(None, basis, eigen, args.extra_scan, coords=c) for c in (x, basis.al_coordinates(x))]
    else:
        certs = list(certify_pair(x, basis, eigen, args.extra_scan))
    ok = True
    for name, c in zip(("g", "g~"), certs):
        ok = ok and c.certified
        zc = ",".join(map(str, c.zero_classes))
        if args.output == "machine":
            out.write(f"form={name}\nverdict={c.verdict}\nmethod={c.method}\nC_g={c.C_g}\nr_g={c.r_g}\nQ={c.Q}\n"
                      f"scanned_to={c.scanned_to}\nzero_classes={zc}\nreason={c.reason}\n")
        else:
            out.write(f"{name}: {c.verdict} ({c.method}) C_g={c.C_g} r_g={c.r_g} Q={c.Q} zero classes=[{zc}] {c.reason}\n")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_verify_summation(args, out) -> int:
    cfg_T = args.T if args.T is not None else 1
    cfg = RunConfig(args.dim, args.level, cfg_T, truncation=args.truncation, basis_file=args.basis_file,
                    eigen_file=args.eigen_file, digits=args.precision)
    cfg.validate()
    basis, eigen = load_inputs(cfg)
    M = args.truncation or SUMMATION_ORDER
    if basis.order < M:
        basis = basis.extended(M)
    if eigen is None:
        eigen = compute_eigen_data(basis)
    pairs = []
    for j in range(basis.dim):
        e = [Fraction(int(i == j)) for i in range(basis.dim)]
        pairs.append((basis.labels[j], e))
    if args.T is not None:
        rep = compute_dual_bound(cfg, basis, eigen)
        if rep.x:
            pairs.append((f"optimum T={args.T}", rep.x))
    ok = True
    for name, x in pairs:
        res = summation_check(basis.combine(x), basis.combine_al(x), args.level, args.dim, args.widths, M,
                              growth=pair_growth(x, basis, eigen))
        ok = ok and res.passed
        tag = "heuristic" if res.heuristic else ("pass" if res.passed else "FAIL")
        if args.output == "machine":
            out.write(f"pair={name}\nresult={tag}\nmax_discrepancy={float(res.max_discrepancy):.3e}\n"
                      f"max_tail={float(res.max_tail):.3e}\n")
        else:
            out.write(f"{name:<28} {tag:<9} discrepancy={float(res.max_discrepancy):.3e} tail={float(res.max_tail):.3e}\n")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_basis(args, out) -> int:
    if args.basis_command == "make":
        if args.dim % 4:
            raise UsageError("dimension must be a multiple of 4")
        basis = assemble_basis(args.dim // 2, args.level, args.truncation)
        save_basis(basis, args.out)
        out.write(f"wrote {basis.dim} forms to q^{basis.order} into {args.out}\n")
        return EXIT_OK
    try:
        basis = load_basis(args.path)
    except BasisFileError as exc:
        out.write(f"invalid basis file: {exc}\n")
        return EXIT_FAILED
    out.write(f"ok: k={basis.weight} N={basis.level} dim={basis.dim} M={basis.order}\n")
    return EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "scan": cmd_scan,
    "certify": cmd_certify,
    "verify-summation": cmd_verify_summation,
    "basis": cmd_basis,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "version":
        out.write(f"spheredual {__version__}\n")
        return EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"spheredual: error: {exc}\n")
        return EXIT_USAGE
    except (BasisFileError, DeferToIngestion, IncompleteBasis, MissingAtkinLehner) as exc:
        sys.stderr.write(f"spheredual: basis stage: {exc}\n")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
