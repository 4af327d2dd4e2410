"""Reachability analysis, relaxed temporal plans and the edit evaluation function."""
from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter, OrderedDict, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .dtp import START, start_pt
from .lagraph import PROPOSITIONAL, TEMPORAL, Flaw, TdaGraph
from .model import AT_END, AT_START, INF, GroundAction, Literal, ProblemInstance, Time


class UnreachableGoalError(ValueError):
    pass


class UndefinedSlackError(ValueError):
    pass


# ---------------------------------------------------------------------------
# window arithmetic


_HIS: Dict[int, tuple] = {}


def _his(ws) -> List[Time]:
    hit = _HIS.get(id(ws))
    if hit is None or hit[0] is not ws:
        if len(_HIS) > 4096:
            _HIS.clear()
        hit = _HIS[id(ws)] = (ws, [w.hi for w in ws])
    return hit[1]


def _eft_fit(a: GroundAction, t: Time) -> Tuple[Time, bool]:
    d = a.duration
    ws = a.timed_pre
    if not ws:
        return t + d, True
    i = bisect_left(_his(ws), t + d)
    for w in ws[i:]:
        s = max(t, w.lo)
        tight = w.hi_strict or (w.lo_strict and s == w.lo)
        if (s + d < w.hi) if tight else (s + d <= w.hi):
            return s + d, True
    return t + d, False


def compute_eft(a: GroundAction, t: Time) -> Time:
    """Earliest finish ``>= t + Dur(a)`` that fits a window; ``t + Dur(a)`` if none does."""
    return _eft_fit(a, t)[0]


def compute_lft(a: GroundAction) -> Time:
    return a.timed_pre[-1].hi if a.timed_pre else INF


def fits_from(a: GroundAction, est: Time) -> bool:
    """Some start ``>= est`` satisfies the merged windows of ``a``."""
    return _eft_fit(a, est)[1]


def failing_timed(a: GroundAction, est: Time) -> List[object]:
    """Original timed conditions of ``a`` that fail for every start ``>= est``."""
    if not a.original_timed:
        return [] if fits_from(a, est) else ["timed-precondition"]
    out = []
    d = a.duration
    for spec in a.original_timed:
        ok = False
        for w in spec.windows:
            if spec.timing == AT_START:
                ok = max(est, w.lo) < w.hi
            elif spec.timing == AT_END:
                ok = max(est + d, w.lo) < w.hi
            else:
                ok = max(est, w.lo) + d <= w.hi
            if ok:
                break
        if not ok:
            out.append(spec.literal)
    return out


def unsatisfied_timed(a: GroundAction, est: Time) -> int:
    return len(failing_timed(a, est))


# ---------------------------------------------------------------------------
# reachability


@dataclass
class ReachabilityTable:
    base: frozenset
    num_acts_f: Dict[Literal, int]
    et: Dict[Literal, Time]
    action_f: Dict[Literal, object]
    num_acts_a: Dict[GroundAction, int]
    eft: Dict[GroundAction, Time]
    lft: Dict[GroundAction, Time]
    iterations: int = 0

    def et_of(self, f) -> Time:
        return self.et.get(f, INF)

    def reachable(self, a: GroundAction) -> bool:
        return all(f in self.et for f in a.pre)

    def est_lb(self, a: GroundAction) -> Time:
        e = self.eft.get(a, INF)
        return e - a.duration if e != INF else INF

    def num_acts(self, a: GroundAction):
        return self.num_acts_a.get(a, INF)


def required_actions(base, goals: Iterable[Literal], table: ReachabilityTable) -> int:
    return len(_required(base, goals, table.action_f))


def _required(base, goals, action_f) -> set:
    acts: set = set()
    added: set = set()
    g = set(goals) - set(base)
    while g:
        f = min(g)
        a = action_f.get(f)
        if a is None or a == START:
            raise UnreachableGoalError(f"{f} is not reachable")
        acts.add(a)
        added |= a.add
        g = (g | a.pre) - set(base) - added
    return acts


def reachability_information(base: Iterable[Literal], actions: Sequence[GroundAction],
                             max_iterations: int = 100_000) -> ReachabilityTable:
    base = frozenset(base)
    et: Dict[Literal, Time] = {f: 0 for f in base}
    nf: Dict[Literal, int] = {f: 0 for f in base}
    act_f: Dict[Literal, object] = {f: START for f in base}
    num_a: Dict[GroundAction, int] = {}
    eft: Dict[GroundAction, Time] = {}
    lft: Dict[GroundAction, Time] = {}
    by_pre: Dict[Literal, List[GroundAction]] = defaultdict(list)
    for a in actions:
        for f in a.pre:
            by_pre[f].append(a)
    F: set = set()
    F_new = set(base)
    pending = set(actions)
    A_rev: set = set()
    iters = 0
    # the first pass runs even on an empty base: actions without preconditions still fire
    while F_new or A_rev or iters == 0:
        iters += 1
        if iters > max_iterations:
            raise RuntimeError("reachability fixpoint did not converge")
        F |= F_new
        F_new = set()
        pending |= A_rev
        A_rev = set()
        for a in [a for a in actions if a in pending and a.pre <= F]:
            t = compute_eft(a, max((et[f] for f in a.pre), default=0))
            if t < eft.get(a, INF):
                eft[a] = t
            lft[a] = compute_lft(a)
            # recorded before the window test so unschedulable achievers still get a count
            ra = len(_required(base, a.pre, act_f))
            if ra < num_a.get(a, INF):
                num_a[a] = ra
            if eft[a] <= lft[a]:
                for f in a.add:
                    if et.get(f, INF) > t:
                        et[f] = t
                        A_rev.update(b for b in by_pre[f] if b not in pending)
                    if nf.get(f, INF) > ra + 1:
                        nf[f] = ra + 1
                        act_f[f] = a
                F_new |= a.add - F
            pending.discard(a)
    return ReachabilityTable(base, nf, et, act_f, num_a, eft, lft, iters)


# ---------------------------------------------------------------------------
# slack


def successors(g: TdaGraph, uid) -> set:
    """Nodes that the orderings force to start after ``uid`` ends."""
    out: Dict[Hashable, List[Hashable]] = defaultdict(list)
    for i, j, _ in g.orderings:
        out[i].append(j)
    seen, stack = set(), [uid]
    while stack:
        for v in out[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def slack(g: TdaGraph, i_uid, j_uid) -> Time:
    """How far the start of ``i`` can slip before ``j`` leaves its chosen window."""
    choice = g.outcome.assignment.choice
    if j_uid not in choice:
        return INF
    if choice[j_uid] is None:
        raise UndefinedSlackError(f"node {j_uid} is unscheduled")
    stp = g.dtp.stp_part.copy()
    for c in g.dtp.sched:
        w = choice.get(c.uid)
        if w is None or c.uid == i_uid:
            continue
        es = c.edges(w)
        for e in (es if c.uid == j_uid else es[:1]):
            stp.assert_edge(e)
    if not stp.is_consistent():
        return 0
    k = stp.dist_from_origin()[start_pt(i_uid)][0]
    if k == math.inf:
        return INF
    return max(0, k - g.t_value(g.level_of(i_uid)))


# ---------------------------------------------------------------------------
# relaxed temporal plans


@dataclass
class PlanContext:
    """The graph a relaxed plan is measured against.

    ``level`` is the level of the node being added (or removed); ``anchor`` is
    that node's id when its start delay matters for time threats.
    """
    graph: TdaGraph
    level: int
    anchor: Optional[Hashable] = None
    slacks: Dict[Hashable, Time] = field(default_factory=dict)

    def __post_init__(self):
        g = self.graph
        cnt: Counter = Counter()
        for lv in range(self.level, g.end_level + 1):
            for fn in g.precondition_nodes(lv):
                if fn.supported:
                    cnt[fn.literal] += 1
        self.supported_after = cnt
        self.earlier = [(g.node_at(lv).action, g.end_time(g.node_at(lv).uid))
                        for lv in range(1, min(self.level, g.end_level))]
        self.anchor_time = g.t_value(g.level_of(self.anchor)) if self.anchor is not None else 0


class RelaxedPlanner:
    def __init__(self, table: ReachabilityTable, ctx: PlanContext, achievers, order, mutex):
        self.table, self.ctx = table, ctx
        self.achievers, self.order, self.mutex = achievers, order, mutex
        self.I: Dict[Literal, Time] = {}
        self.T: Dict[Literal, Time] = {}  # facts achieved by chosen actions
        self.start: Dict[GroundAction, Time] = {}
        self.finish: Dict[GroundAction, Time] = {}
        self.t_run: Time = 0
        self._memo: Dict[Literal, Time] = {}
        self._best: Dict[tuple, GroundAction] = {}
        self._guard: set = set()
        self._active: set = set()

    # -- per-action estimates ---------------------------------------------------

    def known(self, f):
        if f in self.T:
            return self.T[f]
        return self.I.get(f)

    def fact_time(self, f: Literal) -> Time:
        k = self.known(f)
        if k is not None:
            return k
        if f in self._memo:
            return self._memo[f]
        if f in self._guard:
            return self.table.et_of(f)
        self._guard.add(f)
        try:
            b = self.best_action(f)
            v = self.est(b) + b.duration
        except UnreachableGoalError:
            v = INF
        finally:
            self._guard.discard(f)
        self._memo[f] = v
        return v

    def mutex_end(self, b: GroundAction) -> Time:
        return max((end for c, end in self.ctx.earlier if self.mutex(c, b)), default=0)

    def est(self, b: GroundAction) -> Time:
        pt = max((self.fact_time(p) for p in b.pre), default=0)
        return max(self.table.est_lb(b), self.mutex_end(b), pt)

    def threats(self, b: GroundAction) -> int:
        return sum(self.ctx.supported_after[f] for f in b.dele)

    def timed_pre_set(self, b: GroundAction) -> List[object]:
        return failing_timed(b, self.est(b))

    def timed_pre(self, b: GroundAction) -> int:
        return len(self.timed_pre_set(b))

    def delta(self, b: GroundAction) -> Time:
        """Estimated delay that adding ``b`` imposes on the anchor's start."""
        return max(0, max(self.t_run, self.est(b) + b.duration) - self.ctx.anchor_time)

    def time_threat_set(self, b: GroundAction) -> List[Hashable]:
        if self.ctx.anchor is None or not self.ctx.slacks:
            return []
        d = self.delta(b)
        return [k for k, s in self.ctx.slacks.items() if d > s]

    def time_threats(self, b: GroundAction) -> int:
        return len(self.time_threat_set(b))

    def score(self, b: GroundAction):
        return (self.table.num_acts(b) + self.threats(b) + self.timed_pre(b) + self.time_threats(b))

    def best_action(self, g: Literal) -> GroundAction:
        key = (g, frozenset(self._active))
        if key in self._best:
            return self._best[key]
        cands = [b for b in self.achievers.get(g, ()) if g not in b.pre and self.table.reachable(b)]
        if not cands:
            raise UnreachableGoalError(f"no reachable achiever for {g}")
        # an achiever that needs a goal still being pursued would close a cycle
        acyclic = [b for b in cands if not (b.pre & self._active)] or cands
        best = acyclic[0] if len(acyclic) == 1 else min(acyclic, key=lambda b: (self.score(b), self.order[b]))
        self._best[key] = best
        return best

    def _changed(self):
        self._memo.clear()
        self._best.clear()

    # -- the relaxed plan --------------------------------------------------------

    def rtp(self, goals: Iterable[Literal], reusable: Sequence[GroundAction] = ()) -> Tuple[List[GroundAction], Time]:
        acts = list(dict.fromkeys(reusable))
        F = set().union(*(a.add for a in acts)) if acts else set()
        goals = set(goals)
        t = max((self.known(g) or 0 for g in goals if g in F or g in self.I), default=0)
        G = goals - set(self.I)
        while True:
            open_ = [g for g in G if g not in F and g not in self._active]
            if not open_:
                break
            g = min(open_, key=lambda f: (-self.table.et_of(f), f))
            self.t_run = t
            b = self.best_action(g)
            self._active.add(g)
            try:
                acts, t_sub = self.rtp(b.pre, acts)
            finally:
                self._active.discard(g)
            s = max(t_sub, self.table.est_lb(b) if self.table.est_lb(b) != INF else 0, self.mutex_end(b))
            tb = compute_eft(b, s)
            self.start[b], self.finish[b] = s, tb
            t = max(t, tb)
            for f in b.add:
                # compute_eft already returns a finish time
                self.T[f] = min(self.T.get(f, INF), tb)
            if b not in acts:
                acts.append(b)
            F |= b.add
            self._changed()
        return acts, t


def relaxed_time_plan(goals, base: Dict[Literal, Time], reusable=(), *, table: ReachabilityTable,
                      problem: ProblemInstance, ctx: Optional[PlanContext] = None,
                      mutex=None) -> Tuple[List[GroundAction], Time]:
    """Stand-alone entry point with an empty-graph context."""
    h = Heuristics(problem)
    if ctx is None:
        from .lagraph import TdaGraph as _G
        ctx = PlanContext(_G(problem, h.mutex), 1)
    rp = RelaxedPlanner(table, ctx, h.achievers, h.order, mutex or h.mutex)
    rp.I = dict(base)
    return rp.rtp(goals, reusable)


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalResult:
    search_cost: float
    temporal_cost: Time
    combined: float
    detail: Dict[str, object] = field(default_factory=dict)


class Heuristics:
    """Problem-wide indices plus a cache of per-level reachability tables."""

    def __init__(self, problem: ProblemInstance, mutex=None, alpha: float = 1.0, beta: float = 1.0,
                 cache_size: int = 256):
        from .lagraph import compute_mutex

        self.problem = problem
        self.mutex = mutex or compute_mutex(problem)
        self.alpha, self.beta = alpha, beta
        self.order = {a: i for i, a in enumerate(problem.actions)}
        self.achievers: Dict[Literal, List[GroundAction]] = defaultdict(list)
        for a in problem.actions:
            for f in a.add:
                self.achievers[f].append(a)
        self._tables: "OrderedDict[frozenset, ReachabilityTable]" = OrderedDict()
        self._cache_size = cache_size
        self.table_builds = 0

    def table_for(self, state: Iterable[Literal]) -> ReachabilityTable:
        key = frozenset(state)
        t = self._tables.get(key)
        if t is None:
            t = reachability_information(key, self.problem.actions)
            self.table_builds += 1
            self._tables[key] = t
            if len(self._tables) > self._cache_size:
                self._tables.popitem(last=False)
        else:
            self._tables.move_to_end(key)
        return t

    def table_at(self, g: TdaGraph, level: int) -> ReachabilityTable:
        return self.table_for(g.state_at(level))

    def planner(self, g: TdaGraph, level: int, ctx: PlanContext) -> RelaxedPlanner:
        return RelaxedPlanner(self.table_at(g, level), ctx, self.achievers, self.order, self.mutex)

    def _combine(self, search, temporal, norm) -> float:
        norm = norm if norm and norm != INF and norm > 0 else 1
        if temporal == INF:
            return INF
        return self.alpha * search + self.beta * float(temporal) / float(norm)

    def _norm(self, g: TdaGraph):
        return g.makespan_bound or max(1, g.outcome.makespan)

    def anchor_slacks(self, ext: TdaGraph, uid) -> Dict[Hashable, Time]:
        out = {}
        for k in successors(ext, uid):
            if k in ext.outcome.assignment.choice and ext.outcome.assignment.choice[k] is not None:
                out[k] = slack(ext, uid, k)
        return out

    def evaluate_insertion(self, g: TdaGraph, a: GroundAction, level: int,
                           flaw: Optional[Flaw] = None, ext: Optional[TdaGraph] = None) -> EvalResult:
        if ext is None:
            ext = g.copy()
            ext.insert_action(a, level)
        uid = ext.node_at(level).uid
        I = g.timed_state(level)
        slacks = self.anchor_slacks(ext, uid)
        rp = self.planner(g, level, PlanContext(ext, level, uid, slacks))
        rp.I = dict(I)
        try:
            acts1, t1 = rp.rtp([p for p in a.pre if p not in I])
            est_a = max(t1, ext.t_value(level))
            finish_a = compute_eft(a, est_a)
            # precondition nodes supported before the edit and not after
            threats = set()
            for lv in range(level, g.end_level + 1):
                for fn in g.precondition_nodes(lv):
                    if fn.supported and ext.supporter(lv + 1, fn.literal) is None:
                        threats.add(fn.literal)
            unsup = set()
            if flaw is not None and flaw.kind == PROPOSITIONAL:
                lv = flaw.level + (1 if flaw.level >= level else 0)
                unsup = {fn.literal for fn in ext.precondition_nodes(lv) if not fn.supported}
            rp.I = {f: t for f, t in I.items() if f not in threats}
            for f in a.add:
                rp.I[f] = min(rp.I.get(f, INF), finish_a)
            rp._changed()
            acts2, t2 = rp.rtp(unsup | threats, acts1 + [a])
        except UnreachableGoalError as exc:
            return EvalResult(INF, INF, INF, {"error": str(exc)})
        if a not in acts2:
            acts2.append(a)
        newly = {u for u in ext.outcome.unscheduled if u not in g.outcome.unscheduled}
        delta = max(0, est_a - ext.t_value(level))
        newly |= {k for k, s in slacks.items() if delta > s}
        n1 = len(newly) + (1 if ext.outcome.bound_violated and not g.outcome.bound_violated else 0)
        n2 = 0 if fits_from(a, est_a) else max(1, unsatisfied_timed(a, est_a))
        n3 = sum(1 for b in acts2 if b is not a and
                 compute_eft(b, rp.start.get(b, 0)) > compute_lft(b))
        search = len(acts2) + n1 + n2 + n3
        temporal = max(t1, finish_a, t2)
        return EvalResult(search, temporal, self._combine(search, temporal, self._norm(g)),
                          {"acts": acts2, "I": n1, "II": n2, "III": n3, "est": est_a,
                           "finish": finish_a, "planner": rp})

    def evaluate_removal(self, g: TdaGraph, level: int, flaw: Optional[Flaw] = None,
                         ext: Optional[TdaGraph] = None) -> EvalResult:
        removed = g.node_at(level)
        if ext is None:
            ext = g.copy()
            ext.remove_action(level)
        goals = set()
        for lv in range(level + 1, g.end_level + 1):
            for fn in g.precondition_nodes(lv):
                if fn.supported and ext.supporter(lv - 1, fn.literal) is None:
                    goals.add(fn.literal)
        leftover = 0
        if flaw is not None and flaw.level > level:
            lv = flaw.level - 1
            if flaw.kind == PROPOSITIONAL:
                goals |= {fn.literal for fn in ext.precondition_nodes(lv) if not fn.supported}
            elif not ext.is_scheduled(lv):
                leftover = 1
        rp = self.planner(g, level, PlanContext(ext, level))
        rp.I = g.timed_state(level)
        try:
            acts, t = rp.rtp(goals)
        except UnreachableGoalError as exc:
            return EvalResult(INF, INF, INF, {"error": str(exc)})
        still = {u for u in ext.outcome.unscheduled if u not in g.outcome.unscheduled}
        n3 = sum(1 for b in acts if compute_eft(b, rp.start.get(b, 0)) > compute_lft(b))
        search = len(acts) + len(still) + n3 + leftover
        temporal = t
        return EvalResult(search, temporal, self._combine(search, temporal, self._norm(g)),
                          {"acts": acts, "I": len(still), "III": n3, "removed": removed.action})
