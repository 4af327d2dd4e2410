"""Command-line frontend: ``plan``, ``validate`` and ``bench {generate,stats}``.

Exit codes: 0 success, 1 unreadable or malformed input, 2 no plan found
(or, for ``validate``, an invalid plan).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import bench, pddl
from .search import SearchConfig, SearchFailure, improve, plan
from .validate import (PlanFormatError, format_time, parse_time, read_plan, validate_plan,
                       write_plan)

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("tempora")


def _setup_logging() -> None:
    level = os.environ.get("TEMPORA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _config(args) -> SearchConfig:
    return SearchConfig(noise=args.noise, tabu_len=args.tabu, max_steps=args.max_steps,
                        max_restarts=args.restarts, seed=args.seed,
                        quality_iterations=args.quality_iterations, max_time=args.max_time)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# plan


def _run_one(domain_text: str, problem_text: str, cfg: SearchConfig):
    """One seeded search instance; returns ``[(makespan, plan text, stats line)]``."""
    p = pddl.parse(domain_text, problem_text)
    t0 = time.monotonic()
    try:
        first = plan(p, cfg)
    except SearchFailure:
        return []
    results = [first]
    if cfg.quality_iterations > 0:
        left = None if cfg.max_time is None else max(0.0, cfg.max_time - (time.monotonic() - t0))
        if left is None or left > 0:
            results += improve(p, replace(cfg, max_time=left), first.plan, first.graph)
    out = []
    for r in results:
        s = r.stats
        out.append((r.plan.makespan, write_plan(r.plan),
                    f"steps {s.steps} restarts {s.restarts} dtps {s.dtp_solves} backtracks {s.backtracks}"))
    return out


def cmd_plan(args) -> int:
    try:
        dtext, ptext = _read(args.domain), _read(args.problem)
        pddl.parse(dtext, ptext)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cfg = _config(args)
    if args.parallel > 1:
        cfgs = [replace(cfg, seed=cfg.seed + k) for k in range(args.parallel)]
        with ProcessPoolExecutor(args.parallel) as pool:
            runs = list(pool.map(_run_one, [dtext] * len(cfgs), [ptext] * len(cfgs), cfgs))
        merged = sorted((r for run in runs for r in run), key=lambda r: r[0], reverse=True)
    else:
        merged = _run_one(dtext, ptext, cfg)
    # keep the strictly improving sequence, in order of improvement
    found, best = [], None
    for r in merged:
        if best is None or r[0] < best:
            found.append(r)
            best = r[0]
    if not found:
        print("no plan found", file=sys.stderr)
        return EXIT_FAIL
    prefix = args.output or Path(args.problem).stem + ".plan"
    for i, (ms, text, stats) in enumerate(found, 1):
        header = [f"plan {i} for {Path(args.problem).name}", f"makespan {format_time(ms)}", stats]
        body = "\n".join(f"; {h}" for h in header) + "\n" + text
        Path(f"{prefix}.{i}").write_text(body)
        if args.verbose:
            print(body, end="")
    print(f"makespan {format_time(found[-1][0])} plans {len(found)} {found[-1][2]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    try:
        p = pddl.load(args.domain, args.problem)
        pl = read_plan(_read(args.plan), p)
    except (OSError, ValueError, PlanFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = validate_plan(p, pl)
    print(rep.render(), end="")
    if args.machine:
        print("\n".join(rep.machine_lines()))
    return EXIT_OK if rep.valid else EXIT_FAIL


# ---------------------------------------------------------------------------
# bench


def cmd_bench_generate(args) -> int:
    try:
        dtext, ptext = _read(args.domain), _read(args.problem)
        dom, prob = pddl.parse_domain(dtext), pddl.parse_problem(ptext)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    preds = args.predicate or bench.window_predicates(dom)
    if not preds:
        print("error: no window predicate given or inferable", file=sys.stderr)
        return EXIT_INPUT
    t = d = None
    if args.bench_method == bench.METHOD_I:
        t = parse_time(args.t) if args.t else None
        if t is None:
            runs = _run_one(dtext, ptext, _config(args))
            if not runs:
                print("error: method I needs a solved base problem", file=sys.stderr)
                return EXIT_FAIL
            t = runs[-1][0]
    else:
        d = parse_time(args.d) if args.d else bench.max_constrained_duration(dom, preds)
    ws = bench.method_windows(args.bench_method, args.windows, t, d)
    lits = [l for pr in preds for l in bench.timed_predicate_literals(prob, pr)]
    out = bench.add_windows(prob, lits, ws)
    text = pddl.write_problem(out)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench_stats(args) -> int:
    rows = {}
    if args.replay:
        try:
            rows[Path(args.replay).name] = bench.summarize(bench.read_events(args.replay))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    for prob_path in args.problems or ():
        try:
            p = pddl.load(args.domain, prob_path)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        log_path = None
        if args.log_dir:
            log_path = str(Path(args.log_dir) / (Path(prob_path).stem + ".jsonl"))
        with bench.StatsRecorder(log_path=log_path) as rec:
            try:
                plan(p, _config(args))
            except SearchFailure:
                pass
        rows[Path(prob_path).name] = bench.summarize(rec.events)
    sys.stdout.write(bench.format_table(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _search_flags(sp: argparse.ArgumentParser) -> None:
    d = SearchConfig()
    sp.add_argument("--seed", type=int, default=d.seed)
    sp.add_argument("--noise", type=float, default=d.noise)
    sp.add_argument("--tabu", type=int, default=d.tabu_len)
    sp.add_argument("--max-steps", type=int, default=d.max_steps)
    sp.add_argument("--restarts", type=int, default=d.max_restarts)
    sp.add_argument("--quality-iterations", type=int, default=d.quality_iterations)
    sp.add_argument("--max-time", type=float, default=None, help="wall-clock cap in seconds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tempora", description="Temporal planner with time windows.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="search for a plan and improve it")
    sp.add_argument("-o", dest="domain", required=True)
    sp.add_argument("-f", dest="problem", required=True)
    sp.add_argument("--output", help="plan file prefix; files get .1, .2, ... suffixes")
    sp.add_argument("--parallel", type=int, default=1, help="independent seeded searches")
    sp.add_argument("-v", "--verbose", action="store_true")
    _search_flags(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("validate", help="check a plan file")
    sp.add_argument("-o", dest="domain", required=True)
    sp.add_argument("-f", dest="problem", required=True)
    sp.add_argument("plan")
    sp.add_argument("--machine", action="store_true", help="also print tab-separated violations")
    sp.set_defaults(func=cmd_validate)

    bp = sub.add_parser("bench", help="benchmark generation and DTP statistics")
    bsub = bp.add_subparsers(dest="bench_command", required=True)
    g = bsub.add_parser("generate", help="add time windows to a base problem")
    g.add_argument("-o", dest="domain", required=True)
    g.add_argument("-f", dest="problem", required=True)
    g.add_argument("--bench-method", choices=[bench.METHOD_I, bench.METHOD_II], default=bench.METHOD_II)
    g.add_argument("--windows", type=int, default=1)
    g.add_argument("--predicate", action="append", help="predicate to put under windows (repeatable)")
    g.add_argument("-t", help="reference makespan for method I (solved when omitted)")
    g.add_argument("-d", help="duration for method II (longest constrained action when omitted)")
    g.add_argument("--output")
    _search_flags(g)
    g.set_defaults(func=cmd_bench_generate)

    s = bsub.add_parser("stats", help="DTP statistics of instrumented runs")
    s.add_argument("-o", dest="domain")
    s.add_argument("problems", nargs="*")
    s.add_argument("--log-dir", help="write one JSONL event log per problem here")
    s.add_argument("--replay", help="summarize an existing JSONL event log")
    _search_flags(s)
    s.set_defaults(func=cmd_bench_stats)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "bench_command", None) == "stats" and args.problems and not args.domain:
        print("error: -o is required with problem files", file=sys.stderr)
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
