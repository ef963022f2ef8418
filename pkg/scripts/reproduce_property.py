"""Certify projected states rho -> P_rows rho P_rows for every window of rows.

Usage: python3 scripts/reproduce_property.py [--a 0.5 --c 0.8 --n 12 --sizes 3,4,5]
"""
import argparse
import itertools

from bevc.criteria import certify
from bevc.hilbert import project_local
from bevc.states import CVParams, build_rho


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--c", type=float, default=0.8)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--sizes", default="3,4,5")
    ap.add_argument("--all-subsets", action="store_true",
                    help="every subset instead of contiguous windows (slow past n=8)")
    args = ap.parse_args()
    rho = build_rho(CVParams(args.a, args.c, args.n))
    print("rows,min_pt_eigenvalue,residual,verdict")
    for size in (int(s) for s in args.sizes.split(",")):
        if args.all_subsets:
            subsets = itertools.combinations(range(1, args.n + 1), size)
        else:
            subsets = (range(s, s + size) for s in range(1, args.n - size + 2))
        for rows in subsets:
            rep = certify(project_local(rho, rows, rows))
            print(f"{';'.join(map(str, rows))},{rep.ppt.min_pt_eigenvalue:.3e},"
                  f"{rep.search.residual:.6e},{rep.verdict}")


if __name__ == "__main__":
    main()
