"""Simple temporal problems with strict and non-strict difference constraints.

An edge ``(u, v, k)`` encodes ``v - u <= k`` (``<`` when strict).  Weights are
kept as pairs ``(k, -n)`` where ``n`` counts strict edges on a path, so a path
weight reads "k minus n infinitesimals" and ordinary tuple comparison is the
right order.  A cycle is infeasible iff its weight is below ``(0, 0)``.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Optional, Tuple

ORIGIN = "origin"
ZERO = (0, 0)
UNREACHED = (math.inf, 0)

Weight = Tuple[object, int]


class InconsistentStpError(ValueError):
    pass


class UnknownEdgeError(KeyError):
    pass


@dataclass(frozen=True)
class StpEdge:
    frm: Hashable
    to: Hashable
    weight: object
    strict: bool = False

    @property
    def key(self) -> Weight:
        return (self.weight, -1 if self.strict else 0)

    def __str__(self) -> str:
        op = "<" if self.strict else "<="
        return f"{self.to} - {self.frm} {op} {self.weight}"


@dataclass
class StpSolution:
    assignment: Dict[Hashable, object]
    # points whose value is an infimum that strict bounds keep from being attained
    open_points: frozenset = frozenset()

    def __getitem__(self, p):
        return self.assignment[p]

    def get(self, p, default=None):
        return self.assignment.get(p, default)


def _add(a: Weight, b: Weight) -> Weight:
    return (a[0] + b[0], a[1] + b[1])


class Stp:
    """Mutable STP; one instance belongs to one search thread."""

    def __init__(self, points: Iterable[Hashable] = ()):
        self._multi: Dict[Tuple[Hashable, Hashable], Counter] = {}
        self._out: Dict[Hashable, Dict[Hashable, Weight]] = {ORIGIN: {}}
        self._in: Dict[Hashable, Dict[Hashable, Weight]] = {ORIGIN: {}}
        self._invalidate()
        for p in points:
            self.add_point(p)

    # -- structure ---------------------------------------------------------

    def add_point(self, p: Hashable) -> None:
        if p not in self._out:
            self._out[p] = {}
            self._in[p] = {}
            if self._potential is not None:
                self._potential[p] = ZERO
                self._from[p] = UNREACHED
                self._to[p] = UNREACHED

    @property
    def points(self):
        return list(self._out)

    def edges(self):
        """Effective (tightest) edges, one per ordered point pair."""
        for u, nbrs in self._out.items():
            for v, (k, s) in nbrs.items():
                yield StpEdge(u, v, k, s < 0)

    def all_edges(self):
        """Every asserted edge, with multiplicity."""
        for (u, v), cnt in self._multi.items():
            for (k, strict), n in cnt.items():
                for _ in range(n):
                    yield StpEdge(u, v, k, strict)

    def __len__(self) -> int:
        return sum(len(n) for n in self._out.values())

    def copy(self) -> "Stp":
        new = Stp.__new__(Stp)
        new._multi = {k: Counter(v) for k, v in self._multi.items()}
        new._out = {k: dict(v) for k, v in self._out.items()}
        new._in = {k: dict(v) for k, v in self._in.items()}
        new._consistent = self._consistent
        new._potential = dict(self._potential) if self._potential is not None else None
        new._from = dict(self._from) if self._from is not None else None
        new._to = dict(self._to) if self._to is not None else None
        return new

    def _invalidate(self) -> None:
        self._consistent: Optional[bool] = None
        self._potential = None
        self._from = None
        self._to = None

    def _effective(self, u, v) -> Optional[Weight]:
        cnt = self._multi.get((u, v))
        if not cnt:
            return None
        return min((k, -1 if strict else 0) for (k, strict) in cnt)

    def add(self, frm, to, weight, strict: bool = False) -> None:
        self.assert_edge(StpEdge(frm, to, weight, strict))

    def assert_edge(self, e: StpEdge) -> None:
        self.add_point(e.frm)
        self.add_point(e.to)
        self._multi.setdefault((e.frm, e.to), Counter())[(e.weight, e.strict)] += 1
        old = self._out[e.frm].get(e.to)
        new = e.key
        if old is not None and old <= new:
            return
        self._out[e.frm][e.to] = new
        self._in[e.to][e.frm] = new
        self._tighten(e.frm, e.to, new)

    def retract_edge(self, e: StpEdge) -> None:
        cnt = self._multi.get((e.frm, e.to))
        if not cnt or cnt[(e.weight, e.strict)] == 0:
            raise UnknownEdgeError(str(e))
        cnt[(e.weight, e.strict)] -= 1
        if cnt[(e.weight, e.strict)] == 0:
            del cnt[(e.weight, e.strict)]
        eff = self._effective(e.frm, e.to)
        if eff is None:
            del self._out[e.frm][e.to]
            del self._in[e.to][e.frm]
            del self._multi[(e.frm, e.to)]
        else:
            self._out[e.frm][e.to] = eff
            self._in[e.to][e.frm] = eff
        self._invalidate()

    def incremental_retract_and_assert(self, removed: Iterable[StpEdge] = (),
                                       added: Iterable[StpEdge] = ()) -> "Stp":
        for e in removed:
            self.retract_edge(e)
        for e in added:
            self.assert_edge(e)
        return self

    # -- shortest paths ----------------------------------------------------

    def _spfa(self, dist, adj, seeds) -> bool:
        """Continue label-correcting relaxation from ``seeds``; False on a negative cycle."""
        n = len(adj) + 1
        queue = deque(seeds)
        queued = set(queue)
        count: Dict[Hashable, int] = {}
        while queue:
            u = queue.popleft()
            queued.discard(u)
            du = dist[u]
            if du[0] == math.inf:
                continue
            for v, w in adj[u].items():
                cand = (du[0] + w[0], du[1] + w[1])
                if cand < dist[v]:
                    dist[v] = cand
                    if v not in queued:
                        c = count.get(v, 0) + 1
                        if c > n:
                            return False
                        count[v] = c
                        queue.append(v)
                        queued.add(v)
        return True

    def _full(self) -> None:
        pot = {p: ZERO for p in self._out}
        ok = self._spfa(pot, self._out, list(self._out))
        self._consistent = ok
        if not ok:
            self._potential = self._from = self._to = None
            return
        self._potential = pot
        frm = {p: UNREACHED for p in self._out}
        frm[ORIGIN] = ZERO
        self._spfa(frm, self._out, [ORIGIN])
        to = {p: UNREACHED for p in self._out}
        to[ORIGIN] = ZERO
        self._spfa(to, self._in, [ORIGIN])
        self._from, self._to = frm, to

    def _tighten(self, u, v, w) -> None:
        if self._consistent is None:
            return
        if self._consistent is False:
            return  # adding edges never restores consistency
        pot, frm, to = self._potential, self._from, self._to
        ok = True
        if _add(pot[u], w) < pot[v]:
            pot[v] = _add(pot[u], w)
            ok = self._spfa(pot, self._out, [v])
        # an unreached endpoint has nothing to propagate
        if ok and frm[u][0] != math.inf and _add(frm[u], w) < frm[v]:
            frm[v] = _add(frm[u], w)
            ok = self._spfa(frm, self._out, [v])
        if ok and to[v][0] != math.inf and _add(to[v], w) < to[u]:
            to[u] = _add(to[v], w)
            ok = self._spfa(to, self._in, [u])
        if not ok:
            self._consistent = False
            self._potential = self._from = self._to = None

    def is_consistent(self) -> bool:
        if self._consistent is None:
            self._full()
        return self._consistent

    def dist_from_origin(self) -> Dict[Hashable, Weight]:
        """``d(origin, p)``: the latest value of ``p`` (upper bound)."""
        if not self.is_consistent():
            raise InconsistentStpError("STP is inconsistent")
        return self._from

    def dist_to_origin(self) -> Dict[Hashable, Weight]:
        """``d(p, origin)``: minus the earliest value of ``p``."""
        if not self.is_consistent():
            raise InconsistentStpError("STP is inconsistent")
        return self._to

    def earliest_solution(self) -> StpSolution:
        to = self.dist_to_origin()
        assign, open_pts = {}, set()
        for p, (k, s) in to.items():
            if k == math.inf:
                # nothing bounds p from below relative to the origin
                assign[p] = -math.inf
                continue
            assign[p] = 0 - k
            if s < 0:
                open_pts.add(p)
        assign[ORIGIN] = 0
        return StpSolution(assign, frozenset(open_pts))

    def latest(self, p):
        k, _ = self.dist_from_origin()[p]
        return k

    def admits(self, edges: Iterable[StpEdge]) -> bool:
        """Would the STP stay consistent with ``edges`` added?  Leaves self unchanged."""
        tmp = self.copy()
        for e in edges:
            tmp.assert_edge(e)
        return tmp.is_consistent()


def bellman_ford_consistent(points, edges) -> bool:
    """Plain textbook Bellman-Ford over lexicographic weights (reference check)."""
    dist = {p: ZERO for p in points}
    es = [(e.frm, e.to, e.key) for e in edges]
    for p in [x for e in edges for x in (e.frm, e.to)]:
        dist.setdefault(p, ZERO)
    for _ in range(len(dist)):
        changed = False
        for u, v, w in es:
            c = _add(dist[u], w)
            if c < dist[v]:
                dist[v] = c
                changed = True
        if not changed:
            return True
    return False
