"""Compare the stacked Riccati values of a random game with its zero-noise reduction.

In the reduced game every noise-weighted moment of T vanishes and T is constant
across each level; in the original game the spread across nodes and the size
of E[T' w | F] show how much the random coefficients matter.
"""
import argparse

import numpy as np

from stochlq import Dims, build_tree, generate_random, solve_backward, zero_noise_reduction


def summary(sol):
    rows = []
    for k, (T, ops) in enumerate(zip(sol.T, sol.operands)):
        rows.append((k, float(np.ptp(T, axis=0).max()), float(np.abs(ops.ETw).max())))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--l", type=int, default=1)
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--preset", default="three_point")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = generate_random(Dims(args.n, args.m, args.l, args.N), build_tree(args.N, args.preset), args.seed)
    full, red = solve_backward(spec), solve_backward(zero_noise_reduction(spec))
    print(f"{'k':>3} {'spread T':>12} {'|E[Tw]|':>12} {'spread T (det)':>15} {'|E[Tw]| (det)':>14}")
    for (k, s1, w1), (_, s2, w2) in zip(summary(full), summary(red)):
        print(f"{k:>3} {s1:>12.4e} {w1:>12.4e} {s2:>15.4e} {w2:>14.4e}")
    print("root T (stochastic):\n", full.T[0][0])
    print("root T (deterministic):\n", red.T[0][0])


if __name__ == "__main__":
    main()
