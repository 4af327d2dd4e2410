"""Stochastic local search over TDA-graphs, and the anytime quality loop."""
from __future__ import annotations

import logging
import random
import sys
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import List, Optional

from .heuristics import EvalResult, Heuristics
from .lagraph import PROPOSITIONAL, Edit, Flaw, TdaGraph
from .model import INF, ProblemInstance, Time
from .validate import Plan, validate_plan

log = logging.getLogger("tempora.search")


@dataclass(frozen=True)
class SearchConfig:
    noise: float = 0.1
    tabu_len: int = 5
    max_steps: int = 500
    max_restarts: int = 10
    seed: int = 0
    quality_iterations: int = 5
    makespan_bound: Optional[Time] = None
    horizon: int = 3
    alpha: float = 1.0
    beta: float = 1.0
    max_time: Optional[float] = None
    progress: bool = False
    # "removals": only a removed node is barred from coming back;
    # "both": every applied edit bars its exact inverse
    tabu_mode: str = "removals"

    def __post_init__(self):
        if not 0 <= self.noise <= 1:
            raise ValueError("noise must lie in [0, 1]")
        if self.tabu_mode not in ("removals", "both"):
            raise ValueError(f"unknown tabu_mode {self.tabu_mode!r}")


@dataclass
class SearchStats:
    steps: int = 0
    restarts: int = 0
    dtp_solves: int = 0
    backtracks: int = 0
    neighborhood_sizes: List[int] = field(default_factory=list)
    decisions: int = 0
    noise_picks: int = 0
    evaluations: int = 0
    applied: List[Edit] = field(default_factory=list)


class SearchFailure(RuntimeError):
    def __init__(self, message: str, stats: SearchStats, flaws=()):
        super().__init__(message)
        self.stats = stats
        self.flaws = list(flaws)


class _Restart(Exception):
    pass


@dataclass
class Candidate:
    edit: Edit
    ext: Optional[TdaGraph] = None
    result: Optional[EvalResult] = None


@dataclass
class PlanResult:
    plan: Plan
    graph: TdaGraph
    stats: SearchStats


# ---------------------------------------------------------------------------
# neighborhoods


def _persists(g: TdaGraph, f, frm: int, to: int) -> bool:
    """No action at levels ``frm .. to-1`` deletes ``f``."""
    return all(f not in g.node_at(k).action.dele for k in range(frm, to))


def neighborhood(g: TdaGraph, flaw: Flaw, h: Heuristics, horizon: int = 3) -> List[Candidate]:
    l = flaw.level
    out: List[Candidate] = []
    if flaw.kind == PROPOSITIONAL:
        f = flaw.subject
        for b in h.achievers.get(f, ()):
            for i in range(max(1, l - horizon), l + 1):
                if _persists(g, f, i, l):
                    out.append(Candidate(Edit("insert", b, i)))
        if l <= g.n:
            out.append(Candidate(Edit("remove", g.node_at(l).action, l)))
        for k in range(1, l):
            a = g.node_at(k).action
            if f in a.dele and f in g.state_at(k) and _persists(g, f, k + 1, l):
                out.append(Candidate(Edit("remove", a, k)))
        return out
    # temporal flaw: unscheduled action, or the makespan bound at the end level
    if l <= g.n:
        out.append(Candidate(Edit("remove", g.node_at(l).action, l)))
        before = g.t_value(l)
    else:
        before = g.outcome.makespan
    for k in range(1, min(l, g.n + 1)):
        ext = g.copy()
        ext.remove_action(k)
        after = ext.t_value(l - 1) if l <= g.n else ext.outcome.makespan
        if after < before or (l > g.n and not ext.outcome.bound_violated):
            out.append(Candidate(Edit("remove", g.node_at(k).action, k), ext))
    return out


def evaluate(g: TdaGraph, c: Candidate, flaw: Flaw, h: Heuristics) -> EvalResult:
    e = c.edit
    if c.ext is None:
        c.ext = g.copy()
        c.ext.apply(e)
    if e.kind == "insert":
        return h.evaluate_insertion(g, e.action, e.level, flaw, c.ext)
    return h.evaluate_removal(g, e.level, flaw, c.ext)


# ---------------------------------------------------------------------------
# the walk


class Walker:
    """One search instance: graph, rng, tabu list and statistics."""

    def __init__(self, p: ProblemInstance, cfg: SearchConfig, h: Optional[Heuristics] = None,
                 stats: Optional[SearchStats] = None):
        self.p, self.cfg = p, cfg
        self.h = h or Heuristics(p, alpha=cfg.alpha, beta=cfg.beta)
        self.stats = stats or SearchStats()
        self.rng = random.Random(cfg.seed)
        self.tabu: deque = deque(maxlen=max(cfg.tabu_len, 0))

    def step(self, g: TdaGraph) -> TdaGraph:
        flaws = g.find_flaws()
        flaw = flaws[0]
        cands = [c for c in neighborhood(g, flaw, self.h, self.cfg.horizon)
                 if c.edit.tabu_key() not in self.tabu]
        self.stats.neighborhood_sizes.append(len(cands))
        if not cands:
            raise _Restart()
        if len(cands) == 1:
            pick = cands[0]
        else:
            self.stats.decisions += 1
            if self.rng.random() < self.cfg.noise:
                self.stats.noise_picks += 1
                pick = self.rng.choice(cands)
            else:
                for c in cands:
                    c.result = evaluate(g, c, flaw, self.h)
                    self.stats.evaluations += 1
                best = min(c.result.combined for c in cands)
                ties = [c for c in cands if c.result.combined == best]
                if best == INF and len(ties) == len(cands) and len(cands) > 1:
                    pick = self.rng.choice(cands)
                else:
                    pick = ties[0] if len(ties) == 1 else self.rng.choice(ties)
        if pick.ext is None:
            pick.ext = g.copy()
            pick.ext.apply(pick.edit)
        self.stats.dtp_solves += 1
        self.stats.backtracks += pick.ext.outcome.stats.backtracks
        if self.cfg.tabu_mode == "both" or pick.edit.kind == "remove":
            self.tabu.append(pick.edit.inverse().tabu_key())
        self.stats.steps += 1
        self.stats.applied.append(pick.edit)
        log.debug("step %d: %s (%d candidates)", self.stats.steps, pick.edit, len(cands))
        return pick.ext

    def run(self, start: TdaGraph, deadline: Optional[float] = None) -> Optional[TdaGraph]:
        g = start
        for n in range(self.cfg.max_steps + 1):
            if not g.find_flaws():
                return g
            if n == self.cfg.max_steps or (deadline is not None and time.monotonic() > deadline):
                return None
            if self.cfg.progress and n % 50 == 0:
                print(f"step {self.stats.steps} flaws {len(g.find_flaws())}", file=sys.stderr)
            try:
                g = self.step(g)
            except _Restart:
                return None
        return None


def _goals_reachable(p: ProblemInstance, h: Heuristics) -> bool:
    t = h.table_for(p.init)
    return all(t.et_of(g) != INF for g in p.goals)


def plan(p: ProblemInstance, cfg: SearchConfig = SearchConfig(), start: Optional[TdaGraph] = None,
         h: Optional[Heuristics] = None) -> PlanResult:
    """Search until a flawless graph is found; raise :class:`SearchFailure` otherwise."""
    h = h or Heuristics(p, alpha=cfg.alpha, beta=cfg.beta)
    stats = SearchStats()
    deadline = time.monotonic() + cfg.max_time if cfg.max_time else None
    mutex = h.mutex
    if not _goals_reachable(p, h):
        raise SearchFailure("some goal is unreachable from the initial state", stats)
    best_flaws: list = []
    for r in range(cfg.max_restarts + 1):
        stats.restarts = r
        walker = Walker(p, replace(cfg, seed=cfg.seed * 1_000_003 + r), h, stats)
        if r == 0 and start is not None:
            g0 = start
        else:
            g0 = TdaGraph(p, mutex, cfg.makespan_bound)
        g = walker.run(g0, deadline)
        if g is not None:
            pl = g.extract_plan()
            rep = validate_plan(p, pl)
            if not rep.valid:
                raise AssertionError("planner produced an invalid plan:\n" + rep.render())
            if cfg.makespan_bound is not None and not pl.makespan < cfg.makespan_bound:
                raise AssertionError("plan does not respect the makespan bound")
            return PlanResult(pl, g, stats)
        if deadline is not None and time.monotonic() > deadline:
            break
    raise SearchFailure("search budget exhausted", stats, best_flaws)


def improve(p: ProblemInstance, cfg: SearchConfig, first: Plan, first_graph: Optional[TdaGraph] = None,
            h: Optional[Heuristics] = None) -> List[PlanResult]:
    """Re-plan under ever tighter makespan bounds; returns each strictly better plan."""
    h = h or Heuristics(p, alpha=cfg.alpha, beta=cfg.beta)
    out: List[PlanResult] = []
    best, graph = first.makespan, first_graph
    deadline = time.monotonic() + cfg.max_time if cfg.max_time else None
    for i in range(cfg.quality_iterations):
        if best <= 0:
            break
        left = None if deadline is None else deadline - time.monotonic()
        if left is not None and left <= 0:
            break
        c = replace(cfg, makespan_bound=best, seed=cfg.seed + 7919 * (i + 1), max_time=left)
        start = None
        if graph is not None:
            start = graph.copy()
            start.set_makespan_bound(best)
        try:
            res = plan(p, c, start, h)
        except SearchFailure:
            break
        out.append(res)
        if cfg.progress:
            print(f"improved makespan {res.plan.makespan}", file=sys.stderr)
        best, graph = res.plan.makespan, res.graph
    return out


def solve(p: ProblemInstance, cfg: SearchConfig = SearchConfig()) -> List[PlanResult]:
    """First plan followed by its improvements."""
    h = Heuristics(p, alpha=cfg.alpha, beta=cfg.beta)
    t0 = time.monotonic()
    first = plan(p, cfg, h=h)
    left = None if cfg.max_time is None else cfg.max_time - (time.monotonic() - t0)
    return [first] + improve(p, replace(cfg, max_time=left), first.plan, first.graph, h)
