"""Disjunctive temporal problems of TDA-graphs and their backtrack-free solver.

Time points: the plan start is ``ORIGIN``; the plan end is ``END``; a domain
action node with id ``u`` owns ``(u, "-")`` and ``(u, "+")``.  Every
scheduling constraint is a disjunction of windows, each window standing for
the pair ``origin - a- <= -lo`` and ``a+ - origin <= hi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .model import Time, TimeWindow
from .stp import ORIGIN, InconsistentStpError, Stp, StpEdge, StpSolution

START = "start"
END = "end"

# callables notified as ``fn(dtp, outcome)`` after every solve (instrumentation)
SOLVE_LISTENERS: List = []


def start_pt(uid):
    return ORIGIN if uid == START else END if uid == END else (uid, "-")


def end_pt(uid):
    return ORIGIN if uid == START else END if uid == END else (uid, "+")


class InconsistentStpPartError(InconsistentStpError):
    """Orderings and durations alone are unsatisfiable (a planner bug)."""


class BudgetExceededError(RuntimeError):
    pass


def window_edges(uid, w: TimeWindow) -> Tuple[StpEdge, ...]:
    lo = StpEdge(start_pt(uid), ORIGIN, -w.lo, w.lo_strict)
    if w.hi == math.inf:
        return (lo,)
    return (lo, StpEdge(ORIGIN, end_pt(uid), w.hi, w.hi_strict))


@dataclass(frozen=True)
class DtpNode:
    uid: Hashable
    level: int
    duration: Time
    windows: Optional[Tuple[TimeWindow, ...]] = None
    label: str = ""


@dataclass(frozen=True)
class SchedulingConstraint:
    uid: Hashable
    windows: Tuple[TimeWindow, ...]
    level: int
    duration: Time
    label: str = ""

    def __post_init__(self):
        if not self.windows:
            raise ValueError("a scheduling constraint needs at least one window")
        if any(a.lo > b.lo for a, b in zip(self.windows, self.windows[1:])):
            raise ValueError("windows must be sorted by lower bound")

    def edges(self, w: TimeWindow) -> Tuple[StpEdge, ...]:
        return window_edges(self.uid, w)


@dataclass(frozen=True)
class StpConstraint:
    """A non-disjunctive constraint, kept with its level for meta-CSP views."""
    name: tuple
    level: float
    edges: Tuple[StpEdge, ...]


@dataclass
class Dtp:
    stp_part: Stp
    sched: List[SchedulingConstraint]
    constraints: List[StpConstraint]
    nodes: List[DtpNode]
    makespan_bound: Optional[Time] = None

    @property
    def level_of(self) -> Dict[Hashable, int]:
        return {n.uid: n.level for n in self.nodes}

    def bound_edge(self) -> Optional[StpEdge]:
        if self.makespan_bound is None:
            return None
        return StpEdge(ORIGIN, END, self.makespan_bound, True)

    def canonical(self):
        """Order-independent description used for equality checks."""
        edges = sorted((repr(c.name), c.level, tuple(map(repr, c.edges))) for c in self.constraints)
        sched = tuple((repr(s.uid), s.level, s.duration, s.windows) for s in self.sched)
        return (tuple(edges), sched, self.makespan_bound)

    def num_variables(self) -> int:
        """Meta-variables: one per constraint, disjunctive or not."""
        return len(self.constraints) + len(self.sched) + (self.makespan_bound is not None)

    def classical_size(self) -> int:
        """Number of disjunctive clauses of the classical (CNF) form."""
        return sum(2 ** len(s.windows) for s in self.sched)


def build_dtp(nodes: Sequence[DtpNode], orderings: Iterable[Tuple[Hashable, Hashable, str]] = (),
              makespan_bound: Optional[Time] = None) -> Dtp:
    """Build the DTP of a leveled plan.

    ``orderings`` holds ``(i, j, reason)`` meaning ``i+ <= j-``; its level is
    the level of ``j``.  Nodes must have distinct levels.
    """
    nodes = sorted(nodes, key=lambda n: n.level)
    level = {n.uid: n.level for n in nodes}
    top = (nodes[-1].level if nodes else 0) + 1
    level[START], level[END] = 0, top
    cons: List[StpConstraint] = []
    for n in nodes:
        s, e = start_pt(n.uid), end_pt(n.uid)
        cons.append(StpConstraint(("duration", n.uid), n.level,
                                  (StpEdge(s, e, n.duration), StpEdge(e, s, -n.duration))))
        cons.append(StpConstraint(("bracket", n.uid), n.level,
                                  (StpEdge(s, ORIGIN, 0), StpEdge(END, e, 0))))
    cons.append(StpConstraint(("bracket", END), top, (StpEdge(END, ORIGIN, 0),)))
    for i, j, _reason in orderings:
        if level[i] >= level[j]:
            raise ValueError(f"ordering {i} -> {j} goes against the level order")
        cons.append(StpConstraint(("order", i, j), level[j], (StpEdge(start_pt(j), end_pt(i), 0),)))
    stp = Stp([ORIGIN, END] + [p for n in nodes for p in (start_pt(n.uid), end_pt(n.uid))])
    for c in cons:
        for e in c.edges:
            stp.assert_edge(e)
    sched = [SchedulingConstraint(n.uid, tuple(n.windows), n.level, n.duration, n.label)
             for n in nodes if n.windows is not None]
    return Dtp(stp, sched, cons, list(nodes), makespan_bound)


def partition_meta_variables(d: Dtp) -> List[List[tuple]]:
    """Meta-variable names grouped by the level that introduced them."""
    by_level: Dict[float, List[tuple]] = {}
    for c in d.constraints:
        by_level.setdefault(c.level, []).append(c.name)
    for s in d.sched:
        by_level.setdefault(s.level, []).append(("schedule", s.uid))
    return [by_level[k] for k in sorted(by_level)]


# ---------------------------------------------------------------------------
# outcomes


@dataclass
class MetaAssignment:
    choice: Dict[Hashable, Optional[TimeWindow]]
    induced: Stp


@dataclass
class SolveStats:
    forward_checks: int = 0
    window_checks: int = 0
    backtracks: int = 0


@dataclass
class SolveOutcome:
    assignment: MetaAssignment
    complete: bool
    schedule: StpSolution
    unscheduled: frozenset
    bound_violated: bool = False
    pruned: Dict[Hashable, Tuple[TimeWindow, ...]] = field(default_factory=dict)
    stats: SolveStats = field(default_factory=SolveStats)
    trace: List[tuple] = field(default_factory=list)

    @property
    def makespan(self):
        return self.schedule[END]

    def start_of(self, uid):
        return self.schedule[start_pt(uid)]

    def key(self):
        """Choices plus schedule, for outcome-equality assertions."""
        return (tuple(sorted((repr(k), v) for k, v in self.assignment.choice.items())),
                tuple(sorted((repr(k), v) for k, v in self.schedule.assignment.items())),
                self.bound_violated)


def window_consistent(frm, to, c: SchedulingConstraint, w: TimeWindow) -> bool:
    """O(1) test that ``w``'s pair keeps a consistent STP consistent.

    ``frm``/``to`` are the STP's distances from/to the origin.  Relies on the
    duration pair being present, which pins ``d(a+, a-)`` to ``-Dur``.
    """
    lo_key = (-w.lo, -1 if w.lo_strict else 0)
    d_o_s = frm[start_pt(c.uid)]
    if (d_o_s[0] + lo_key[0], d_o_s[1] + lo_key[1]) < (0, 0):
        return False
    if w.hi == math.inf:
        return True
    hi_key = (w.hi, -1 if w.hi_strict else 0)
    d_e_o = to[end_pt(c.uid)]
    if (hi_key[0] + d_e_o[0], hi_key[1] + d_e_o[1]) < (0, 0):
        return False
    return (hi_key[0] - c.duration + lo_key[0], hi_key[1] + lo_key[1]) >= (0, 0)


def bound_consistent(to, bound) -> bool:
    k, s = to[END]
    return (bound + k, s - 1) >= (0, 0)


def forward_check(pending: Sequence[SchedulingConstraint], domains: Dict[Hashable, List[TimeWindow]],
                  induced: Stp, stats: Optional[SolveStats] = None) -> bool:
    """Prune, in place, pending windows whose pair is inconsistent with ``induced``."""
    frm, to = induced.dist_from_origin(), induced.dist_to_origin()
    ok = True
    if stats is not None:
        stats.forward_checks += 1
    for c in pending:
        dom = domains[c.uid]
        if stats is not None:
            stats.window_checks += len(dom)
        kept = [w for w in dom if window_consistent(frm, to, c, w)]
        if len(kept) != len(dom):
            domains[c.uid] = kept
        if not kept:
            ok = False
    return ok


def select_value(dom: Sequence[TimeWindow]) -> TimeWindow:
    return min(dom, key=lambda w: (w.lo, w.lo_strict))


def _ordered(d: Dtp) -> List[SchedulingConstraint]:
    idx = {id(c): i for i, c in enumerate(d.sched)}
    return sorted(d.sched, key=lambda c: (c.level, idx[id(c)]))


def solve_plus(d: Dtp, reuse: Optional[Dict[Hashable, Optional[TimeWindow]]] = None,
               reuse_below: float = -math.inf) -> SolveOutcome:
    """Backtrack-free solve; returns a partial outcome when unsatisfiable.

    ``reuse`` maps node ids to earlier choices that may be taken without
    search for constraints below level ``reuse_below``.
    """
    induced = d.stp_part.copy()
    if not induced.is_consistent():
        raise InconsistentStpPartError("ordering and duration constraints are inconsistent")
    stats = SolveStats()
    order = _ordered(d)
    domains = {c.uid: list(c.windows) for c in order}
    forward_check(order, domains, induced, stats)
    pruned: Dict[Hashable, Tuple[TimeWindow, ...]] = {}
    choice: Dict[Hashable, Optional[TimeWindow]] = {}
    trace = []
    for i, c in enumerate(order):
        dom = domains[c.uid]
        if len(dom) != len(c.windows):
            pruned[c.uid] = tuple(w for w in c.windows if w not in dom)
        if reuse is not None and c.level < reuse_below and c.uid in reuse:
            # a lower-level choice only depends on lower levels; the check is a cheap guard
            w = reuse[c.uid]
            if (w is None) != (not dom) or (w is not None and w != dom[0]):
                w = select_value(dom) if dom else None
        else:
            w = select_value(dom) if dom else None
        if w is None:
            choice[c.uid] = None
            trace.append((("schedule", c.uid), None))
            continue
        choice[c.uid] = w
        trace.append((("schedule", c.uid), w))
        for e in c.edges(w):
            induced.assert_edge(e)
        forward_check(order[i + 1:], domains, induced, stats)
    bound_violated = False
    if d.makespan_bound is not None:
        if bound_consistent(induced.dist_to_origin(), d.makespan_bound):
            induced.assert_edge(d.bound_edge())
        else:
            bound_violated = True
    unscheduled = frozenset(u for u, w in choice.items() if w is None)
    out = SolveOutcome(MetaAssignment(choice, induced), not unscheduled and not bound_violated,
                       induced.earliest_solution(), unscheduled, bound_violated, pruned, stats, trace)
    for fn in SOLVE_LISTENERS:
        fn(d, out)
    return out


def incremental_solve(d: Dtp, prev: SolveOutcome, edit_level: int) -> SolveOutcome:
    """Re-solve after an edit at ``edit_level``, reusing choices of lower levels."""
    return solve_plus(d, prev.assignment.choice, edit_level)


# ---------------------------------------------------------------------------
# reference meta-CSP solver with chronological backtracking


@dataclass
class MetaVar:
    name: tuple
    level: float
    idx: int
    values: List[Tuple[Tuple[StpEdge, ...], Optional[TimeWindow]]]


def meta_variables(d: Dtp) -> List[MetaVar]:
    vs: List[MetaVar] = []
    for c in d.constraints:
        vs.append(MetaVar(c.name, c.level, len(vs), [(c.edges, None)]))
    for s in d.sched:
        vs.append(MetaVar(("schedule", s.uid), s.level, len(vs),
                          [(s.edges(w), w) for w in s.windows]))
    if d.makespan_bound is not None:
        vs.append(MetaVar(("bound",), math.inf, len(vs), [((d.bound_edge(),), None)]))
    return vs


def select_variable(pending: Sequence[MetaVar], domains: Dict[int, list]) -> MetaVar:
    """Single-valued variables first, then lowest level, then insertion order."""
    return min(pending, key=lambda v: (len(domains[v.idx]) > 1, v.level, v.idx))


def solve_dtp(d: Dtp) -> SolveOutcome:
    """Forward-checking backtracking search over all meta-variables.

    Slow; kept to instrument the zero-backtrack property.  Returns an
    incomplete outcome (no choices) when the meta-CSP has no solution.
    """
    points = d.stp_part.points
    variables = meta_variables(d)
    domains = {v.idx: list(v.values) for v in variables}
    stats = SolveStats()
    trace: List[tuple] = []
    result: Dict[str, object] = {}

    def consistent(stp: Stp, edges) -> bool:
        stats.window_checks += 1
        return stp.admits(edges)

    def fc(pending, stp) -> bool:
        stats.forward_checks += 1
        for v in pending:
            domains[v.idx] = [val for val in domains[v.idx] if consistent(stp, val[0])]
            if not domains[v.idx]:
                return False
        return True

    def rec(pending: List[MetaVar], stp: Stp, chosen: dict) -> bool:
        if not pending:
            result["stp"], result["chosen"] = stp, dict(chosen)
            return True
        x = select_variable(pending, domains)
        rest = [v for v in pending if v is not x]
        while domains[x.idx]:
            val = select_value_meta(domains[x.idx])
            domains[x.idx].remove(val)
            s2 = stp.copy()
            for e in val[0]:
                s2.assert_edge(e)
            saved = {v.idx: list(domains[v.idx]) for v in rest}
            if s2.is_consistent():
                trace.append((x.name, val[1]))
                chosen[x.name] = val[1]
                if fc(rest, s2) and rec(rest, s2, chosen):
                    return True
                chosen.pop(x.name, None)
            domains.update(saved)
        stats.backtracks += 1
        return False

    ok = rec(variables, Stp(points), {})
    if not ok:
        empty = Stp(points)
        return SolveOutcome(MetaAssignment({}, empty), False, StpSolution({}),
                            frozenset(s.uid for s in d.sched), d.makespan_bound is not None,
                            stats=stats, trace=trace)
    stp: Stp = result["stp"]  # type: ignore[assignment]
    chosen = result["chosen"]
    choice = {s.uid: chosen[("schedule", s.uid)] for s in d.sched}
    return SolveOutcome(MetaAssignment(choice, stp), True, stp.earliest_solution(),
                        frozenset(), False, stats=stats, trace=trace)


def select_value_meta(dom):
    return min(dom, key=lambda val: (val[1].lo, val[1].lo_strict) if val[1] is not None else (-math.inf, False))


# ---------------------------------------------------------------------------
# classical form


def classical_clauses(d: Dtp) -> List[List[Optional[StpEdge]]]:
    """CNF expansion of the scheduling constraints: one clause per choice of
    one literal from every window (``None`` stands for a literal that is
    always true, such as an unbounded window end)."""
    import itertools

    out = []
    for s in d.sched:
        lits = []
        for w in s.windows:
            es = s.edges(w)
            lits.append(list(es) if len(es) == 2 else [es[0], None])
        for combo in itertools.product(*lits):
            out.append(list(combo))
    return out


def dump_classical(d: Dtp) -> str:
    lines = ["; stp part"]
    lines += [str(e) for e in d.stp_part.all_edges()]
    lines.append("; disjunctive clauses")
    for cl in classical_clauses(d):
        lines.append(" or ".join("true" if e is None else str(e) for e in cl))
    if d.makespan_bound is not None:
        lines.append("; bound")
        lines.append(str(d.bound_edge()))
    return "\n".join(lines) + "\n"
