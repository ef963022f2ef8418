"""Schmidt rank of |Psi> and of the leading eigenvector of rho as the cutoff grows."""
import argparse

from bevc.criteria import schmidt_rank_scan
from bevc.states import CVParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--c", type=float, default=0.8)
    ap.add_argument("--k-max", type=int, default=30)
    args = ap.parse_args()
    rows = schmidt_rank_scan(CVParams(args.a, args.c, args.k_max), range(2, args.k_max + 1))
    print("K,psi_rank,leading_eigvec_rank,leading_eigenvalue")
    for r in rows:
        print(f"{r.K},{r.psi_rank},{r.leading_eigvec_rank},{r.leading_eigenvalue:.6e}")


if __name__ == "__main__":
    main()
