"""Plan and validate a batch of generated ZenoTravel- and Rovers-style instances.

    python3 scripts/run_zeno.py --instances 10 --seeds 0 1 2 3 4
"""
import argparse
import time

from tempora import bench, pddl
from tempora.search import SearchConfig, SearchFailure, plan
from tempora.validate import format_time, validate_plan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--method", choices=[bench.METHOD_I, bench.METHOD_II], default=bench.METHOD_II)
    ap.add_argument("--max-time", type=float, default=10.0)
    args = ap.parse_args()

    failures = 0
    for family, gen in (("zeno", bench.zeno_instance), ("rovers", bench.rovers_instance)):
        for k in range(args.instances):
            p = pddl.parse(*gen(k, n_windows=1 + k % 3, method=args.method, t=None if args.method == "II" else 100))
            for s in args.seeds:
                t = time.perf_counter()
                try:
                    res = plan(p, SearchConfig(seed=s, max_time=args.max_time))
                    verdict = "valid" if validate_plan(p, res.plan).valid else "INVALID"
                    ms = format_time(res.plan.makespan)
                except SearchFailure:
                    verdict, ms = "no plan", "-"
                failures += verdict != "valid"
                print(f"{family}-{k:<3d} seed {s}  {time.perf_counter() - t:6.2f} s  makespan {ms:>6}  {verdict}")
    print(f"failures: {failures}")


if __name__ == "__main__":
    main()
