"""Write the basis file and eigenform file for M_k(Gamma0(N)), k = d/2.

The files can be fed back with ``--basis-file`` / ``--eigen-file``, which
skips assembly and the Hecke computation on later runs.
"""
import argparse
from pathlib import Path

from spheredual.eigenforms import compute_eigen_data, save_eigen
from spheredual.modspace import assemble_basis, save_basis


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, required=True)
    ap.add_argument("--level", type=int, required=True)
    ap.add_argument("--truncation", type=int)
    ap.add_argument("--outdir", default=".")
    args = ap.parse_args()
    k, N = args.dim // 2, args.level
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    basis = assemble_basis(k, N, args.truncation)
    eigen = compute_eigen_data(basis)
    bpath, epath = out / f"basis_k{k}_N{N}.txt", out / f"eigen_k{k}_N{N}.txt"
    save_basis(basis, bpath)
    save_eigen(eigen, epath)
    print(f"{bpath}: {basis.dim} forms to q^{basis.order}")
    print(f"{epath}: {len(eigen.entries)} eigenforms, {sum(e.exact for e in eigen.entries)} rational")


if __name__ == "__main__":
    main()
