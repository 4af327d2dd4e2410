"""Time solve_plus on random TDA-shaped DTPs and fit log-log slopes.

    python3 scripts/scaling.py --ns 4 8 16 32 64 --omegas 1 2 4 8 16 32
"""
import argparse
import math
import random
import statistics
import time

from tempora.bench import scaling_dtp
from tempora.dtp import solve_plus


def median_time(n, omega, reps, seed):
    rng = random.Random(seed * 100_003 + 1000 * n + omega)
    ts = []
    for _ in range(reps):
        d = scaling_dtp(rng, n, omega)
        t = time.perf_counter()
        solve_plus(d)
        ts.append(time.perf_counter() - t)
    return statistics.median(ts)


def slope(xs, ys):
    return statistics.linear_regression([math.log(x) for x in xs], [math.log(y) for y in ys]).slope


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--omegas", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    ap.add_argument("--fixed-n", type=int, default=16)
    ap.add_argument("--fixed-omega", type=int, default=4)
    ap.add_argument("--reps", type=int, default=9)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    by_n = [median_time(n, args.fixed_omega, args.reps, args.seed) for n in args.ns]
    for n, t in zip(args.ns, by_n):
        print(f"n={n:<5d} omega={args.fixed_omega:<4d} median {t * 1e3:9.3f} ms")
    print(f"slope in n: {slope(args.ns, by_n):.2f}")
    by_w = [median_time(args.fixed_n, w, args.reps, args.seed) for w in args.omegas]
    for w, t in zip(args.omegas, by_w):
        print(f"n={args.fixed_n:<5d} omega={w:<4d} median {t * 1e3:9.3f} ms")
    print(f"slope in omega: {slope(args.omegas, by_w):.2f}")


if __name__ == "__main__":
    main()
