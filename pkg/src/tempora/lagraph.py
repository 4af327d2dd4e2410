"""Linear action graphs with temporal information (TDA-graphs).

Level ``0`` holds the plan start, levels ``1..n`` hold one domain action each
and level ``n+1`` holds the plan end whose preconditions are the goals.  Fact
level ``l`` is the state before the action at level ``l``; a fact persists to
the next level (a no-op) unless the action at ``l`` deletes it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, NamedTuple, Optional, Tuple

from .dtp import END, START, Dtp, DtpNode, SolveOutcome, build_dtp, incremental_solve, solve_plus
from .model import GroundAction, Literal, ProblemInstance, Time

PROPOSITIONAL = "propositional"
TEMPORAL = "temporal"


class GraphError(ValueError):
    pass


class GraphHasFlawsError(GraphError):
    pass


def interferes(a: GroundAction, b: GroundAction) -> bool:
    return bool(a.dele & (b.pre | b.add)) or bool(b.dele & (a.pre | a.add))


class MutexRelation:
    """Static interference between ground actions, memoized per pair."""

    def __init__(self, actions: Iterable[GroundAction] = ()):
        self._cache: Dict[Tuple[int, int], bool] = {}
        self.actions = tuple(actions)

    def __call__(self, a: GroundAction, b: GroundAction) -> bool:
        if a is b:
            return False
        k = (id(a), id(b)) if id(a) < id(b) else (id(b), id(a))
        v = self._cache.get(k)
        if v is None:
            v = self._cache[k] = interferes(a, b)
        return v

    def blocks_noop(self, a: GroundAction, f: Literal) -> bool:
        return f in a.dele

    def pairs(self):
        return {(a, b) for a, b in itertools.permutations(self.actions, 2) if self(a, b)}


def compute_mutex(p: ProblemInstance) -> MutexRelation:
    return MutexRelation(p.actions)


@dataclass(frozen=True)
class ActionNode:
    uid: int
    action: GroundAction


@dataclass(frozen=True)
class FactNode:
    literal: Literal
    level: int
    supported: bool
    t_value: Optional[Time] = None
    supporter: Optional[Hashable] = None


class Flaw(NamedTuple):
    level: int
    kind: str
    subject: object

    def sort_key(self):
        return (self.level, self.kind != PROPOSITIONAL, str(self.subject))


@dataclass(frozen=True)
class Edit:
    kind: str  # "insert" | "remove"
    action: GroundAction
    level: int

    def inverse(self) -> "Edit":
        return Edit("remove" if self.kind == "insert" else "insert", self.action, self.level)

    def tabu_key(self):
        return (self.kind, self.action.key, self.level)

    def __str__(self):
        return f"{self.kind} {self.action.label} @{self.level}"


class TdaGraph:
    def __init__(self, problem: ProblemInstance, mutex: Optional[MutexRelation] = None,
                 makespan_bound: Optional[Time] = None, actions: Iterable[GroundAction] = ()):
        self.problem = problem
        self.mutex = mutex or compute_mutex(problem)
        self.makespan_bound = makespan_bound
        self.nodes: List[ActionNode] = []
        self._uids = itertools.count(1)
        for a in actions:
            self.nodes.append(ActionNode(next(self._uids), a))
        self._rebuild()
        self.outcome: SolveOutcome = solve_plus(self.dtp)

    # -- structure -----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def end_level(self) -> int:
        return len(self.nodes) + 1

    def node_at(self, level: int) -> ActionNode:
        if not 1 <= level <= self.n:
            raise GraphError(f"no domain action at level {level}")
        return self.nodes[level - 1]

    def level_of(self, uid) -> int:
        if uid == START:
            return 0
        if uid == END:
            return self.end_level
        for i, nd in enumerate(self.nodes, 1):
            if nd.uid == uid:
                return i
        raise KeyError(uid)

    def preconditions_at(self, level: int) -> frozenset:
        if level == self.end_level:
            return self.problem.goals
        return self.node_at(level).action.pre

    def _rebuild(self) -> None:
        state: Dict[Literal, Hashable] = {f: START for f in self.problem.init}
        self._states: List[Dict[Literal, Hashable]] = [dict(state)]  # index l-1 holds fact level l
        self._support: List[Dict[Literal, Optional[Hashable]]] = []
        orderings = set()
        for nd in self.nodes:
            a = nd.action
            supp = {p: state.get(p) for p in a.pre}
            self._support.append(supp)
            for s in supp.values():
                if s is not None and s != START:
                    orderings.add((s, nd.uid, "causal"))
            for f in a.dele:
                state.pop(f, None)
            for f in a.add:
                state[f] = nd.uid
            self._states.append(dict(state))
        self._support.append({g: state.get(g) for g in self.problem.goals})
        for (i, ni), (j, nj) in itertools.combinations(enumerate(self.nodes), 2):
            if self.mutex(ni.action, nj.action):
                orderings.add((ni.uid, nj.uid, "mutex"))
        self.orderings = sorted(orderings, key=lambda o: (self.level_of(o[1]), self.level_of(o[0]), o[2]))
        dnodes = [DtpNode(nd.uid, i, nd.action.duration, nd.action.timed_pre, nd.action.label)
                  for i, nd in enumerate(self.nodes, 1)]
        self.dtp: Dtp = build_dtp(dnodes, [(i, j, r) for i, j, r in self.orderings
                                           if not (r == "mutex" and (i, j, "causal") in orderings)],
                                  self.makespan_bound)

    def rebuild_dtp(self) -> Dtp:
        """A fresh DTP for the current graph (lockstep checks)."""
        keep = self.dtp
        self._rebuild()
        fresh, self.dtp = self.dtp, keep
        return fresh

    # -- edits -----------------------------------------------------------------

    def insert_action(self, a: GroundAction, level: int) -> ActionNode:
        if not 1 <= level <= self.end_level:
            raise GraphError(f"insertion level {level} out of range 1..{self.end_level}")
        nd = ActionNode(next(self._uids), a)
        self.nodes.insert(level - 1, nd)
        self._rebuild()
        self.outcome = incremental_solve(self.dtp, self.outcome, level)
        return nd

    def remove_action(self, level: int) -> ActionNode:
        if not 1 <= level <= self.n:
            raise GraphError("only domain action nodes can be removed")
        nd = self.nodes.pop(level - 1)
        self._rebuild()
        self.outcome = incremental_solve(self.dtp, self.outcome, level)
        return nd

    def apply(self, e: Edit) -> None:
        if e.kind == "insert":
            self.insert_action(e.action, e.level)
        else:
            if self.node_at(e.level).action is not e.action:
                raise GraphError(f"level {e.level} does not hold {e.action.label}")
            self.remove_action(e.level)

    def set_makespan_bound(self, bound: Optional[Time]) -> None:
        self.makespan_bound = bound
        self._rebuild()
        self.outcome = solve_plus(self.dtp)

    def copy(self) -> "TdaGraph":
        g = TdaGraph.__new__(TdaGraph)
        g.problem, g.mutex, g.makespan_bound = self.problem, self.mutex, self.makespan_bound
        g.nodes = list(self.nodes)
        g._uids = itertools.count(max([nd.uid for nd in self.nodes], default=0) + 1)
        g._states, g._support, g.orderings = self._states, self._support, self.orderings
        g.dtp, g.outcome = self.dtp, self.outcome
        return g

    # -- temporal values -----------------------------------------------------

    def t_value(self, level: int) -> Time:
        if level == 0:
            return 0
        if level == self.end_level:
            return self.outcome.makespan
        return self.outcome.start_of(self.node_at(level).uid)

    def end_time(self, uid) -> Time:
        if uid == START:
            return 0
        lv = self.level_of(uid)
        return self.t_value(lv) + self.node_at(lv).action.duration

    def is_scheduled(self, level: int) -> bool:
        if level == self.end_level:
            return not self.outcome.bound_violated
        return self.node_at(level).uid not in self.outcome.unscheduled

    def state_at(self, level: int) -> Dict[Literal, Hashable]:
        """Facts of fact level ``level`` mapped to their supporting node id."""
        return self._states[level - 1]

    def timed_state(self, level: int) -> Dict[Literal, Time]:
        """Facts of fact level ``level`` with the time they become true."""
        return {f: self.end_time(s) for f, s in self._states[level - 1].items()}

    def precondition_nodes(self, level: int) -> List[FactNode]:
        out = []
        for f, s in sorted(self._support[level - 1].items()):
            if s is None:
                out.append(FactNode(f, level, False))
            else:
                out.append(FactNode(f, level, True, self.end_time(s), s))
        return out

    def fact_level(self, level: int) -> List[FactNode]:
        return [FactNode(f, level, True, self.end_time(s), s)
                for f, s in sorted(self._states[level - 1].items())]

    def noops(self, level: int) -> frozenset:
        """Facts carried from fact level ``level`` to ``level + 1``."""
        st = self._states[level - 1]
        if level > self.n:
            return frozenset(st)
        a = self.node_at(level).action
        return frozenset(f for f in st if not self.mutex.blocks_noop(a, f))

    def supporter(self, level: int, f: Literal):
        return self._support[level - 1].get(f)

    # -- flaws and plans -----------------------------------------------------

    def find_flaws(self) -> List[Flaw]:
        flaws = []
        for lv, supp in enumerate(self._support, 1):
            for f, s in supp.items():
                if s is None:
                    flaws.append(Flaw(lv, PROPOSITIONAL, f))
        for uid in self.outcome.unscheduled:
            flaws.append(Flaw(self.level_of(uid), TEMPORAL, uid))
        if self.outcome.bound_violated:
            flaws.append(Flaw(self.end_level, TEMPORAL, END))
        flaws.sort(key=Flaw.sort_key)
        return flaws

    def extract_plan(self):
        from .validate import Plan

        if self.find_flaws():
            raise GraphHasFlawsError("graph still has flaws")
        return Plan.of([(self.t_value(i), nd.action) for i, nd in enumerate(self.nodes, 1)])

    # -- inspection ------------------------------------------------------------

    def canonical(self):
        """Uid-free description of graph, DTP and schedule for equality checks."""
        pos = {nd.uid: i for i, nd in enumerate(self.nodes, 1)}
        rename = lambda u: pos.get(u, u)  # noqa: E731
        nodes = tuple(nd.action.key for nd in self.nodes)
        ords = tuple(sorted((rename(i), rename(j), r) for i, j, r in self.orderings))
        choice = tuple(sorted((pos[u], w) for u, w in self.outcome.assignment.choice.items()))
        times = tuple(self.t_value(l) for l in range(self.end_level + 1))
        return (nodes, ords, choice, times, self.outcome.bound_violated)

    def dump(self) -> str:
        lines = [f"level 0: a_start t=0"]
        for lv in range(1, self.end_level + 1):
            lines.append(f"  facts@{lv}: " + " ".join(str(f) for f in sorted(self._states[lv - 1])))
            for fn in self.precondition_nodes(lv):
                src = "-" if not fn.supported else (fn.supporter if fn.supporter == START
                                                    else f"L{self.level_of(fn.supporter)}")
                lines.append(f"    pre {fn.literal} <- {src}")
            if lv == self.end_level:
                lines.append(f"level {lv}: a_end t={self.t_value(lv)}")
            else:
                nd = self.node_at(lv)
                tag = "" if self.is_scheduled(lv) else " UNSCHEDULED"
                lines.append(f"level {lv}: {nd.action.label} t={self.t_value(lv)}{tag}")
        for i, j, r in self.orderings:
            lines.append(f"order L{self.level_of(i)} -> L{self.level_of(j)} ({r})")
        return "\n".join(lines) + "\n"


def init_graph(p: ProblemInstance, mutex: Optional[MutexRelation] = None,
               makespan_bound: Optional[Time] = None) -> TdaGraph:
    return TdaGraph(p, mutex, makespan_bound)
