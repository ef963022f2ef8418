"""Truncated normalization A_N, its tail bound and the true tail, by cutoff."""
import argparse

from bevc.states import CVParams, normalization


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--c", type=float, default=0.8)
    ap.add_argument("--n-max", type=int, default=80)
    args = ap.parse_args()
    print("N,A_N,tail,tail_bound")
    for N in range(10, args.n_max + 1, 10):
        nb = normalization(CVParams(args.a, args.c, N))
        tail = nb.psi_norm_sq_limit + nb.pair_sum_limit - nb.A
        print(f"{N},{nb.A:.17g},{tail:.3e},{nb.tail_bound:.3e}")
    print(nb.note)


if __name__ == "__main__":
    main()
