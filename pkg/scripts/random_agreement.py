"""Riccati feedback vs. brute-force best responses on seeded random games.

Usage: python scripts/random_agreement.py [--count 20] [--seed 1000] [--preset rademacher]
"""
import argparse

import numpy as np

from stochlq import Dims, build_tree, generate_random, nash_gap, solve_backward
from stochlq.game import ansatz_residual, closed_loop_check, simulate_feedback, sup_norm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1000)
    ap.add_argument("--preset", default="rademacher")
    args = ap.parse_args()

    print(f"{'seed':>6} {'n':>2} {'m':>2} {'l':>2} {'N':>2} {'min rcond':>10} {'ansatz':>9} {'closed':>9} {'gap u':>9} {'gap v':>9}")
    for i in range(args.count):
        seed = args.seed + i
        rng = np.random.default_rng(seed)
        n, m, l = (int(a) for a in rng.integers(1, 4, size=3))
        N = int(rng.integers(2, 5))
        spec = generate_random(Dims(n, m, l, N), build_tree(N, args.preset), seed)
        sol = solve_backward(spec)
        traj = simulate_feedback(spec, sol)
        gap = nash_gap(spec, traj.controls)
        closed = max(sup_norm(v) for v in closed_loop_check(spec, sol).values())
        rc = min(float(r.min()) for r in sol.rcond)
        print(f"{seed:>6} {n:>2} {m:>2} {l:>2} {N:>2} {rc:>10.3e} {sup_norm(ansatz_residual(traj, sol)):>9.1e} "
              f"{closed:>9.1e} {gap.gap_u:>9.1e} {gap.gap_v:>9.1e}")


if __name__ == "__main__":
    main()
