"""Protocol-vs-direct distance over a (beta, gamma) grid, plus Kerr aliasing per phase count."""
import argparse
import math

from bevc.optics import ProtocolParams, kerr_delta_approx, uniform_phases, verify


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10)
    args = ap.parse_args()
    N = args.n
    print("beta,gamma,frobenius,max_per_k")
    for beta in (0.5, math.log(2), 1.0, 1.5):
        for ratio in (0.2, 0.5, 0.8):
            rep = verify(ProtocolParams(beta, ratio * beta, N - 2), N)
            print(f"{beta:.4f},{ratio * beta:.4f},{rep.frobenius_distance:.2e},"
                  f"{max(rep.per_k_residuals.values()):.2e}")
    print()
    print("L,k,error,aliased")
    for L in (1, 2, 4, 8, 16, 32):
        for k in (0, 1, N // 2):
            a = kerr_delta_approx(k, uniform_phases(L), N)
            print(f"{L},{k},{a.error:.3e},{';'.join(map(str, a.aliased))}")


if __name__ == "__main__":
    main()
