"""Brute-force references for the tests.

Everything here is exponential on purpose and guarded by explicit budgets:
an oracle that silently truncates its search could report a wrong answer.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from .dtp import (END, BudgetExceededError, Dtp, DtpNode, MetaAssignment, SolveOutcome, SolveStats,
                  build_dtp, classical_clauses)
from .model import (OVER_ALL, GroundAction, ProblemInstance, Time, TimedConditionSpec, TimeWindow,
                    compile_timed_conditions, lit)
from .stp import ORIGIN, Stp, StpEdge

DTP_BUDGET = 100_000


def _earliest_end(stp: Stp) -> Time:
    k, _ = stp.dist_to_origin()[END]
    return -k


def _greedy_prefix(d: Dtp) -> Tuple[Dict[Hashable, Optional[TimeWindow]], Stp]:
    """Level order, first window that keeps the STP consistent, else nothing."""
    stp = d.stp_part.copy()
    choice: Dict[Hashable, Optional[TimeWindow]] = {}
    for c in sorted(d.sched, key=lambda c: c.level):
        choice[c.uid] = None
        for w in c.windows:
            trial = stp.copy()
            for e in c.edges(w):
                trial.assert_edge(e)
            if trial.is_consistent():
                choice[c.uid], stp = w, trial
                break
    return choice, stp


def brute_dtp(d: Dtp, budget: int = DTP_BUDGET) -> SolveOutcome:
    """Optimal complete choice by enumerating window combinations.

    A depth-first walk over the constraints in level order visits every
    combination; a prefix whose STP is already inconsistent is cut (adding
    edges never restores consistency) and so is one whose earliest end is no
    better than the best complete choice seen (adding edges never lowers it).
    """
    space = math.prod(len(c.windows) for c in d.sched)
    if space > budget:
        raise BudgetExceededError(f"{space} window combinations exceed the budget of {budget}")
    base = d.stp_part.copy()
    if not base.is_consistent():
        raise ValueError("the non-disjunctive part is already inconsistent")
    order = sorted(d.sched, key=lambda c: c.level)
    bound = d.bound_edge()
    best: List = [math.inf, None, None]  # end, choice, stp
    stats = SolveStats()
    any_complete = [False]

    def rec(i: int, stp: Stp, chosen: Dict[Hashable, TimeWindow]) -> None:
        if i == len(order):
            any_complete[0] = True
            final = stp
            if bound is not None:
                final = stp.copy()
                final.assert_edge(bound)
                if not final.is_consistent():
                    return
            end = _earliest_end(final)
            if end < best[0]:
                best[:] = [end, dict(chosen), final]
            return
        c = order[i]
        for w in c.windows:
            stats.window_checks += 1
            nxt = stp.copy()
            for e in c.edges(w):
                nxt.assert_edge(e)
            if not nxt.is_consistent() or _earliest_end(nxt) >= best[0]:
                continue
            chosen[c.uid] = w
            rec(i + 1, nxt, chosen)
            del chosen[c.uid]

    rec(0, base, {})
    if best[1] is not None:
        stp = best[2]
        return SolveOutcome(MetaAssignment(best[1], stp), True, stp.earliest_solution(),
                            frozenset(), False, {}, stats, [])
    choice, stp = _greedy_prefix(d)
    unscheduled = frozenset(u for u, w in choice.items() if w is None)
    violated = bool(any_complete[0] and not unscheduled and bound is not None)
    return SolveOutcome(MetaAssignment(choice, stp), False, stp.earliest_solution(), unscheduled,
                        violated, {}, stats, [])


def classical_solve(d: Dtp, budget: int = DTP_BUDGET) -> Tuple[bool, Optional[Time]]:
    """Satisfiability and optimal end over the clause (CNF) expansion.

    Naive meta-CSP backtracking: each clause is a variable whose values are
    its literals.  Returns ``(satisfiable, earliest end)``.
    """
    clauses = classical_clauses(d)
    extra: List[StpEdge] = [d.bound_edge()] if d.makespan_bound is not None else []
    base = d.stp_part.copy()
    for e in extra:
        base.assert_edge(e)
    if not base.is_consistent():
        return False, None
    best = [math.inf]
    nodes = [0]

    def holds(stp: Stp, e: Optional[StpEdge]) -> bool:
        if e is None:
            return True
        cur = stp._out.get(e.frm, {}).get(e.to)
        return cur is not None and cur <= e.key

    def rec(i: int, stp: Stp) -> None:
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceededError("classical expansion exceeded its budget")
        while i < len(clauses) and any(holds(stp, e) for e in clauses[i]):
            i += 1
        if i == len(clauses):
            best[0] = min(best[0], _earliest_end(stp))
            return
        for e in clauses[i]:
            nxt = stp.copy()
            nxt.assert_edge(e)
            if nxt.is_consistent() and _earliest_end(nxt) < best[0]:
                rec(i + 1, nxt)

    rec(0, base)
    if best[0] == math.inf:
        return False, None
    return True, best[0]


# ---------------------------------------------------------------------------
# random DTPs shaped like those of TDA-graphs


@dataclass(frozen=True)
class RandomDtpConfig:
    max_actions: int = 8
    max_windows: int = 4
    max_duration: int = 20
    horizon: int = 120
    order_prob: float = 0.3
    window_prob: float = 0.6
    bound_prob: float = 0.2
    product_cap: int = 4096


def random_windows(rng: random.Random, k: int, horizon: int) -> Tuple[TimeWindow, ...]:
    cuts = sorted(rng.sample(range(horizon + 1), 2 * k))
    ws = []
    for i in range(k):
        lo, hi = cuts[2 * i], cuts[2 * i + 1]
        ws.append(TimeWindow(lo, hi, False, rng.random() < 0.8))
    return tuple(ws)


def random_tda_dtp(rng: random.Random, cfg: RandomDtpConfig = RandomDtpConfig()) -> Dtp:
    """Actions on distinct levels, forward orderings only, disjoint sorted windows."""
    n = rng.randint(1, cfg.max_actions)
    nodes, product = [], 1
    for lvl in range(1, n + 1):
        dur = rng.randint(1, cfg.max_duration)
        ws = None
        if rng.random() < cfg.window_prob:
            k = rng.randint(1, cfg.max_windows)
            while k > 1 and product * k > cfg.product_cap:
                k -= 1
            product *= k
            ws = random_windows(rng, k, cfg.horizon)
        nodes.append(DtpNode(lvl, lvl, dur, ws, f"a{lvl}"))
    orderings = [(i.uid, j.uid, "causal") for i in nodes for j in nodes
                 if i.level < j.level and rng.random() < cfg.order_prob]
    bound = rng.randint(cfg.horizon // 4, cfg.horizon * 2) if rng.random() < cfg.bound_prob else None
    return build_dtp(nodes, orderings, bound)


# ---------------------------------------------------------------------------
# random tiny planning problems


@dataclass(frozen=True)
class RandomProblemConfig:
    facts: int = 6
    actions: int = 7
    timed_literals: int = 2
    max_duration: int = 20
    horizon: int = 100
    timed_prob: float = 0.4
    walk: int = 3


def random_problem(rng: random.Random, cfg: RandomProblemConfig = RandomProblemConfig()) -> ProblemInstance:
    """Propositional actions over ``f0..fk``; some need a timed literal over all.

    Goals are facts reached by a random walk from the initial state, so the
    goals are reachable when time windows are ignored.
    """
    facts = [lit(f"f{i}") for i in range(cfg.facts)]
    timed = {lit(f"w{i}"): tuple(TimeWindow(w.lo, w.hi) for w in
                                 random_windows(rng, rng.randint(1, 3), cfg.horizon))
             for i in range(cfg.timed_literals)}
    init = frozenset(rng.sample(facts, rng.randint(1, 3)))
    actions = []
    for i in range(cfg.actions):
        pre = frozenset(rng.sample(facts, rng.randint(1, 2)))
        add = frozenset(rng.sample([f for f in facts if f not in pre], rng.randint(1, 2)))
        dele = frozenset(rng.sample(sorted(pre), rng.randint(0, 1)))
        specs = ()
        if timed and rng.random() < cfg.timed_prob:
            w = rng.choice(sorted(timed))
            specs = (TimedConditionSpec(w, OVER_ALL, timed[w]),)
        a = compile_timed_conditions(GroundAction(f"op{i}", (), rng.randint(1, cfg.max_duration),
                                                  pre, add, dele, None, specs))
        if a is not None:
            actions.append(a)
    state = set(init)
    for _ in range(cfg.walk):
        ok = [a for a in actions if a.pre <= state]
        if not ok:
            break
        a = rng.choice(ok)
        state = (state - a.dele) | a.add
    goals = frozenset(f for f in state if f not in init) or frozenset(rng.sample(facts, 1))
    return ProblemInstance({}, init, goals, tuple(actions), timed)


# ---------------------------------------------------------------------------
# optimal tiny plans


def brute_plan(p: ProblemInstance, max_actions: int, budget: int = 200_000):
    """Minimum-makespan plan over all linear graphs of at most ``max_actions`` actions.

    Returns ``None`` when no such graph is flawless.  A prefix is extended
    only while it has no flaw, which is sound because later levels never
    change the support or the schedule of earlier ones.
    """
    from .lagraph import TdaGraph, compute_mutex

    mutex = compute_mutex(p)
    goals = set(p.goals)
    if goals <= set(p.init):
        from .validate import Plan
        return Plan(())
    best: List = [math.inf, None]
    nodes = [0]

    def flawless_prefix(g: TdaGraph) -> bool:
        return all(f.level > g.n for f in g.find_flaws())

    def rec(g: TdaGraph, state: frozenset) -> None:
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceededError("plan enumeration exceeded its budget")
        if goals <= state:
            ms = g.outcome.makespan
            if ms < best[0]:
                best[:] = [ms, g.extract_plan()]
        if g.n == max_actions:
            return
        for a in p.actions:
            if not a.pre <= state:
                continue
            ext = g.copy()
            ext.insert_action(a, g.n + 1)
            if not flawless_prefix(ext) or ext.outcome.makespan >= best[0]:
                continue
            rec(ext, (state - a.dele) | a.add)

    rec(TdaGraph(p, mutex), frozenset(p.init))
    return best[1]
