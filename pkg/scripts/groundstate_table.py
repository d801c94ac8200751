"""Ground-state norms, identity residuals and sharp constants for k = 1..4 at two resolutions."""

import argparse

from gzk import functionals as fn
from gzk.groundstate import petviashvili_solve, reference_quantities


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--points", type=int, nargs="+", default=[512, 1024])
    ap.add_argument("--half-length", type=float, default=20.0)
    args = ap.parse_args()
    print(f"{'k':>2} {'N':>5} {'mass_sq':>20} {'grad/mass-k/2':>14} {'J/C-1':>10} {'C_kR':>12} {'iters':>5}")
    for k in args.ks:
        for n in args.points:
            gs = petviashvili_solve(k, args.half_length, n)
            j = fn.gn_functional(gs.profile, k) / gs.sharp_constant - 1
            print(f"{k:>2} {n:>5} {gs.mass_sq:20.15f} {gs.grad_sq / gs.mass_sq - k / 2:14.2e} {j:10.1e} "
                  f"{gs.sharp_constant:12.8f} {gs.iterations:>5}")
            if k >= 2 and n == args.points[0]:
                ref = reference_quantities(gs)
                print(f"       s_k={ref.s_k:.4f} gradQ_Q={ref.gradQ_Q:.10f} (closed {ref.gradQ_Q_closed:.10f})"
                      + (f" HQ_MQ={ref.HQ_MQ:.10f} (closed {ref.HQ_MQ_closed:.10f})" if ref.HQ_MQ else ""))


if __name__ == "__main__":
    main()
