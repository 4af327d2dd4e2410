"""Solve one small generated instance under more and more time windows per literal.

    python3 scripts/window_scaling.py --domain rovers --seed 2 --windows 1 10 100 1000 10000
"""
import argparse
import time

from tempora import bench, pddl
from tempora.search import SearchConfig, plan
from tempora.validate import format_time, validate_plan

GENERATORS = {"zeno": bench.zeno_instance, "rovers": bench.rovers_instance}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--domain", choices=sorted(GENERATORS), default="rovers")
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--windows", type=int, nargs="+", default=[1, 10, 100, 1000, 10000])
    ap.add_argument("--search-seed", type=int, default=0)
    args = ap.parse_args()

    base = None
    for n in args.windows:
        dtext, ptext = GENERATORS[args.domain](args.seed, n_windows=n)
        p = pddl.parse(dtext, ptext)
        t = time.perf_counter()
        res = plan(p, SearchConfig(seed=args.search_seed))
        dt = time.perf_counter() - t
        base = base or dt
        ok = validate_plan(p, res.plan).valid
        print(f"windows={n:<6d} solve {dt:8.3f} s  x{dt / base:7.1f}  "
              f"makespan {format_time(res.plan.makespan)}  valid={ok}")


if __name__ == "__main__":
    main()
