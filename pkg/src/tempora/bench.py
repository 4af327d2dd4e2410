"""Benchmark generation (time-window recipes, small test domains) and DTP statistics."""
from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import dtp as _dtp
from .model import OVER_ALL, Literal, Time, as_time
from .pddl import Problem, parse_domain, parse_problem, write_problem

METHOD_I = "I"
METHOD_II = "II"


def method_windows(method: str, n: int, t: Optional[Time] = None, d: Optional[Time] = None
                   ) -> List[Tuple[Time, Time]]:
    """The ``n`` odd sub-intervals of ``[0, T]`` split into ``2n - 1`` equal parts.

    Method I uses ``T = t`` (a reference makespan); method II uses
    ``T = d * (2n - 1)`` so every window is exactly ``d`` long.
    """
    if n < 1:
        raise ValueError("need at least one window")
    if method == METHOD_I:
        if t is None or t <= 0:
            raise ValueError("method I needs a positive reference makespan t")
        total = as_time(t)
    elif method == METHOD_II:
        if d is None or d <= 0:
            raise ValueError("method II needs a positive duration d")
        total = as_time(d) * (2 * n - 1)
    else:
        raise ValueError(f"unknown method {method!r}")
    step = Fraction(total) / (2 * n - 1)
    return [(as_time(2 * k * step), as_time((2 * k + 1) * step)) for k in range(n)]


def add_windows(prob: Problem, literals: Iterable[Literal], windows: Sequence[Tuple[Time, Time]]) -> Problem:
    """Make each literal hold only during ``windows`` (timed initial literals)."""
    lits = {l.positive() for l in literals}
    timed = [(t, l) for t, l in prob.timed if l.positive() not in lits]
    for l in sorted(lits):
        for lo, hi in windows:
            timed.append((lo, l))
            timed.append((hi, Literal(l.predicate, l.args, True)))
    init = [f for f in prob.init if f not in lits]
    return replace(prob, init=init, timed=sorted(timed, key=lambda x: (x[0], x[1].negated is False)))


def timed_predicate_literals(prob: Problem, predicate: str) -> List[Literal]:
    found = {l.positive() for l in prob.init if l.predicate == predicate}
    found |= {l.positive() for _, l in prob.timed if l.predicate == predicate}
    return sorted(found)


def generate(prob: Problem, method: str, n: int, predicate: str, t: Optional[Time] = None,
             d: Optional[Time] = None) -> Problem:
    ws = method_windows(method, n, t, d)
    return add_windows(prob, timed_predicate_literals(prob, predicate), ws)


# ---------------------------------------------------------------------------
# small test domains

ZENO_DOMAIN = """
(define (domain zeno-lite)
  (:requirements :typing :durative-actions :timed-initial-literals)
  (:types aircraft person - locatable city flevel - object)
  (:constants f0 f1 f2 f3 - flevel)
  (:predicates (at ?x - locatable ?c - city) (in ?p - person ?a - aircraft)
               (fuel-level ?a - aircraft ?l - flevel) (next ?l1 ?l2 - flevel)
               (open-station ?c - city))
  (:durative-action board
    :parameters (?p - person ?a - aircraft ?c - city)
    :duration (= ?duration 5)
    :condition (and (at start (at ?p ?c)) (over all (at ?a ?c)))
    :effect (and (at end (not (at ?p ?c))) (at end (in ?p ?a))))
  (:durative-action debark
    :parameters (?p - person ?a - aircraft ?c - city)
    :duration (= ?duration 5)
    :condition (and (at start (in ?p ?a)) (over all (at ?a ?c)))
    :effect (and (at end (not (in ?p ?a))) (at end (at ?p ?c))))
  (:durative-action fly-slow
    :parameters (?a - aircraft ?c1 ?c2 - city ?l1 ?l2 - flevel)
    :duration (= ?duration 20)
    :condition (and (at start (at ?a ?c1)) (at start (fuel-level ?a ?l1))
                    (at start (next ?l2 ?l1)) (at start (not (= ?c1 ?c2))))
    :effect (and (at end (not (at ?a ?c1))) (at end (at ?a ?c2))
                 (at end (not (fuel-level ?a ?l1))) (at end (fuel-level ?a ?l2))))
  (:durative-action fly-fast
    :parameters (?a - aircraft ?c1 ?c2 - city ?l1 ?l2 ?l3 - flevel)
    :duration (= ?duration 10)
    :condition (and (at start (at ?a ?c1)) (at start (fuel-level ?a ?l1))
                    (at start (next ?l2 ?l1)) (at start (next ?l3 ?l2)) (at start (not (= ?c1 ?c2))))
    :effect (and (at end (not (at ?a ?c1))) (at end (at ?a ?c2))
                 (at end (not (fuel-level ?a ?l1))) (at end (fuel-level ?a ?l3))))
  (:durative-action refuel
    :parameters (?a - aircraft ?c - city ?l1 ?l2 - flevel)
    :duration (= ?duration 15)
    :condition (and (at start (fuel-level ?a ?l1)) (at start (next ?l1 ?l2))
                    (over all (at ?a ?c)) (over all (open-station ?c)))
    :effect (and (at end (not (fuel-level ?a ?l1))) (at end (fuel-level ?a ?l2)))))
"""

ROVERS_DOMAIN = """
(define (domain rovers-lite)
  (:requirements :typing :durative-actions :timed-initial-literals)
  (:types rover waypoint elevel)
  (:constants e0 e1 e2 e3 - elevel)
  (:predicates (at ?r - rover ?w - waypoint) (path ?w1 ?w2 - waypoint) (energy ?r - rover ?e - elevel)
               (next ?e1 ?e2 - elevel) (soil-at ?w - waypoint) (have-soil ?r - rover ?w - waypoint)
               (lander-at ?w - waypoint) (communicated ?w - waypoint) (in_sun ?w - waypoint))
  (:durative-action navigate
    :parameters (?r - rover ?w1 ?w2 - waypoint ?e1 ?e2 - elevel)
    :duration (= ?duration 10)
    :condition (and (at start (at ?r ?w1)) (at start (path ?w1 ?w2))
                    (at start (energy ?r ?e1)) (at start (next ?e2 ?e1)))
    :effect (and (at end (not (at ?r ?w1))) (at end (at ?r ?w2))
                 (at end (not (energy ?r ?e1))) (at end (energy ?r ?e2))))
  (:durative-action recharge
    :parameters (?r - rover ?w - waypoint ?e1 ?e2 - elevel)
    :duration (= ?duration 12)
    :condition (and (over all (at ?r ?w)) (over all (in_sun ?w))
                    (at start (energy ?r ?e1)) (at start (next ?e1 ?e2)))
    :effect (and (at end (not (energy ?r ?e1))) (at end (energy ?r ?e2))))
  (:durative-action sample-soil
    :parameters (?r - rover ?w - waypoint)
    :duration (= ?duration 8)
    :condition (and (over all (at ?r ?w)) (at start (soil-at ?w)))
    :effect (and (at end (not (soil-at ?w))) (at end (have-soil ?r ?w))))
  (:durative-action communicate
    :parameters (?r - rover ?w ?l - waypoint)
    :duration (= ?duration 6)
    :condition (and (over all (at ?r ?l)) (at start (lander-at ?l)) (at start (have-soil ?r ?w)))
    :effect (and (at end (communicated ?w)))))
"""

ZENO_TIMED = "open-station"
ROVERS_TIMED = "in_sun"
ZENO_MAX_TIMED_DURATION = 15
ROVERS_MAX_TIMED_DURATION = 12


def _lit(text: str) -> Literal:
    parts = text.split()
    return Literal(parts[0], tuple(parts[1:]))


def zeno_instance(seed: int, n_windows: int = 1, method: str = METHOD_II, t: Optional[Time] = None) -> Tuple[str, str]:
    """A solvable ZenoTravel-style instance with at most six objects.

    The aircraft starts at ``c0`` with an empty tank, so it must refuel while
    the local station is open before its single flight to the destination.
    Method II always opens a window of length 15 at time 0, which is enough.
    """
    rng = random.Random(seed)
    n_cities = rng.randint(2, 3)
    n_people = rng.randint(1, 5 - n_cities)
    cities = [f"c{i}" for i in range(n_cities)]
    people = [f"p{i}" for i in range(n_people)]
    dest = rng.choice(cities[1:])
    init = [_lit("at plane c0"), _lit("fuel-level plane f0")]
    init += [_lit(f"next f{i} f{i + 1}") for i in range(3)]
    init += [_lit(f"at {p} c0") for p in people]
    init += [_lit(f"open-station {c}") for c in cities]
    goals = [_lit(f"at {p} {dest}") for p in people]
    if rng.random() < 0.3:
        goals.append(_lit(f"at plane {dest}"))
    objects = [("plane", "aircraft")] + [(c, "city") for c in cities] + [(p, "person") for p in people]
    prob = Problem(f"zeno-{seed}", "zeno-lite", objects, init, [], goals, "total-time")
    prob = generate(prob, method, n_windows, ZENO_TIMED, t=t, d=ZENO_MAX_TIMED_DURATION)
    return ZENO_DOMAIN, write_problem(prob)


def rovers_instance(seed: int, n_windows: int = 1, method: str = METHOD_II, t: Optional[Time] = None) -> Tuple[str, str]:
    """A solvable Rovers-style instance: recharge in the sun, drive once, sample."""
    rng = random.Random(seed)
    n_wp = rng.randint(2, 5)
    wps = [f"w{i}" for i in range(n_wp)]
    target = "w1"
    init = [_lit("at rover w0"), _lit("energy rover e0"), _lit(f"soil-at {target}")]
    init.append(_lit(f"lander-at {rng.choice(['w0', target])}"))
    init += [_lit(f"next e{i} e{i + 1}") for i in range(3)]
    for a, b in zip(wps, wps[1:]):
        init += [_lit(f"path {a} {b}"), _lit(f"path {b} {a}")]
    init += [_lit(f"in_sun {w}") for w in ["w0"] + [w for w in wps[1:] if rng.random() < 0.5]]
    lander_here = _lit(f"lander-at {target}") in init
    goals = [_lit(f"communicated {target}")] if lander_here else [_lit(f"have-soil rover {target}")]
    objects = [("rover", "rover")] + [(w, "waypoint") for w in wps]
    prob = Problem(f"rovers-{seed}", "rovers-lite", objects, init, [], goals, "total-time")
    prob = generate(prob, method, n_windows, ROVERS_TIMED, t=t, d=ROVERS_MAX_TIMED_DURATION)
    return ROVERS_DOMAIN, write_problem(prob)


# ---------------------------------------------------------------------------
# DTP statistics


@dataclass
class DtpEvent:
    variables: int
    scheduling: int
    classical: int
    satisfiable: bool
    windows: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


@dataclass
class StatsRecorder:
    """Context manager collecting one event per DTP solve."""
    events: List[DtpEvent] = field(default_factory=list)
    log_path: Optional[str] = None

    def _hook(self, d, outcome) -> None:
        self.events.append(DtpEvent(d.num_variables(), len(d.sched), d.classical_size(), outcome.complete,
                                   sum(len(c.windows) for c in d.sched)))

    def __enter__(self):
        _dtp.SOLVE_LISTENERS.append(self._hook)
        return self

    def __exit__(self, *exc):
        _dtp.SOLVE_LISTENERS.remove(self._hook)
        if self.log_path:
            write_events(self.log_path, self.events)
        return False


def write_events(path: str, events: Sequence[DtpEvent]) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(e.to_json() + "\n")


def read_events(path: str) -> List[DtpEvent]:
    with open(path) as fh:
        return [DtpEvent(**json.loads(line)) for line in fh if line.strip()]


def summarize(events: Sequence[DtpEvent]) -> Dict[str, object]:
    if not events:
        return {"dtps": 0, "sat_dtps": 0, "max_vars": 0, "mean_vars": 0, "max_sc": 0,
                "mean_sc": 0, "max_win": 0, "mean_win": 0, "max_dc": 0, "mean_dc": 0}
    vs = [e.variables for e in events]
    sc = [e.scheduling for e in events]
    dc = [e.classical for e in events]
    wn = [e.windows for e in events]
    return {"dtps": len(events), "sat_dtps": sum(e.satisfiable for e in events),
            "max_vars": max(vs), "mean_vars": round(statistics.mean(vs), 2),
            "max_sc": max(sc), "mean_sc": round(statistics.mean(sc), 2),
            "max_win": max(wn), "mean_win": round(statistics.mean(wn), 2),
            "max_dc": max(dc), "mean_dc": round(statistics.mean(dc), 2)}


def format_table(rows: Dict[str, Dict[str, object]]) -> str:
    cols = ["dtps", "sat_dtps", "max_vars", "mean_vars", "max_sc", "mean_sc", "max_win", "mean_win",
            "max_dc", "mean_dc"]
    head = "run".ljust(24) + "".join(c.rjust(10) for c in cols)
    lines = [head]
    for name, r in rows.items():
        lines.append(str(name).ljust(24) + "".join(str(r[c]).rjust(10) for c in cols))
    return "\n".join(lines) + "\n"


def window_predicates(dom) -> List[str]:
    """Static predicates required ``over all`` by some action: the natural window targets."""
    fluent = {a.predicate for s in dom.actions for a in s.add + s.dele}
    over = {atom.predicate for s in dom.actions for timing, atom in s.conditions if timing == OVER_ALL}
    return sorted(over - fluent)


def max_constrained_duration(dom, predicates: Iterable[str]) -> Time:
    """Longest duration among schemas conditioned on any of ``predicates`` (method II's ``d``)."""
    preds = set(predicates)
    durs = [as_time(s.duration) for s in dom.actions
            if any(atom.predicate in preds for _, atom in s.conditions)]
    if not durs:
        raise ValueError(f"no action is conditioned on {sorted(preds)}")
    return max(durs)


# ---------------------------------------------------------------------------
# scaling instances


def scaling_dtp(rng: random.Random, n: int, omega: int, max_duration: int = 10,
                order_prob: float = 0.3) -> "_dtp.Dtp":
    """A TDA-shaped DTP with ``n`` actions, each under ``omega`` windows.

    Windows are ``2 * max_duration`` long with random gaps, so most actions
    fit in several of them and forward checking has real work to do.
    """
    from .model import TimeWindow

    span = 2 * max_duration
    nodes = []
    for lvl in range(1, n + 1):
        t, ws = rng.randint(0, span), []
        for _ in range(omega):
            ws.append(TimeWindow(t, t + span))
            t += span + rng.randint(1, span)
        nodes.append(_dtp.DtpNode(lvl, lvl, rng.randint(1, max_duration), tuple(ws), f"a{lvl}"))
    orderings = [(i.uid, j.uid, "causal") for i in nodes for j in nodes
                 if i.level < j.level and rng.random() < order_prob]
    return _dtp.build_dtp(nodes, orderings)
