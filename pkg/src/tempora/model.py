"""Ground planning model: literals, time windows, durative actions and problems.

All temporal quantities are exact rationals (``int`` or ``fractions.Fraction``);
``math.inf`` is only used as an unbounded window end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

Time = Union[int, Fraction]
INF = math.inf

AT_START = "at-start"
AT_END = "at-end"
OVER_ALL = "over-all"
TIMINGS = (AT_START, AT_END, OVER_ALL)


def as_time(x) -> Time:
    """Normalize a number to an exact ``int`` or ``Fraction``.

    Floats are converted through their decimal repr so ``0.1`` becomes 1/10.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not times")
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return x
        x = Fraction(repr(x))
    elif not isinstance(x, Fraction):
        x = Fraction(x)
    return int(x) if x.denominator == 1 else x


class Literal(NamedTuple):
    predicate: str
    args: Tuple[str, ...] = ()
    negated: bool = False

    def positive(self) -> "Literal":
        return Literal(self.predicate, self.args, False) if self.negated else self

    def __str__(self) -> str:
        body = "(" + " ".join((self.predicate,) + tuple(self.args)) + ")"
        return f"(not {body})" if self.negated else body


def lit(text: str) -> Literal:
    """Build a positive literal from ``"pred a b"`` or ``"(pred a b)"``."""
    parts = text.strip().strip("()").split()
    return Literal(parts[0], tuple(parts[1:]))


class TimelineError(ValueError):
    pass


@dataclass(frozen=True)
class TimeWindow:
    """A time window ``[lo, hi)``.

    Used both for the interval in which a timed literal holds and as an
    execution window for an action.  For the latter the flags describe the
    constraint on the action interval ``[s, e)``: ``s >= lo`` (``>`` when
    ``lo_strict``) and ``e <= hi`` (``<`` when ``hi_strict``).  An over-all
    condition on a literal holding during ``[lo, hi)`` may end exactly at
    ``hi``, so the default flags are both false.
    """

    lo: Time
    hi: Union[Time, float]
    lo_strict: bool = False
    hi_strict: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty window [{self.lo}, {self.hi})")

    @property
    def length(self):
        return self.hi - self.lo

    def admits(self, start: Time, duration: Time) -> bool:
        """True if an action running over ``[start, start + duration)`` fits."""
        end = start + duration
        ok_lo = start > self.lo if self.lo_strict else start >= self.lo
        ok_hi = end < self.hi if self.hi_strict else end <= self.hi
        return ok_lo and ok_hi

    def can_fit(self, duration: Time) -> bool:
        """True if some start time places an action of ``duration`` inside."""
        room = self.hi - self.lo
        if self.lo_strict or self.hi_strict:
            return room > duration
        return room >= duration

    def holds_at(self, t: Time) -> bool:
        """Literal semantics: the literal holds at ``t`` iff ``lo <= t < hi``."""
        return self.lo <= t < self.hi

    def shifted(self, lo_delta: Time = 0, hi_delta: Time = 0, **flags) -> "TimeWindow":
        return replace(self, lo=self.lo + lo_delta, hi=self.hi + hi_delta, **flags)

    def __str__(self) -> str:
        left = "(" if self.lo_strict else "["
        right = ")" if self.hi_strict else "]"
        return f"{left}{self.lo}, {self.hi}{right}"


@dataclass(frozen=True)
class TimedConditionSpec:
    literal: Optional[Literal]
    timing: str
    windows: Tuple[TimeWindow, ...]

    def __post_init__(self):
        if self.timing not in TIMINGS:
            raise ValueError(f"unknown timing {self.timing!r}")
        for a, b in zip(self.windows, self.windows[1:]):
            if not a.hi <= b.lo:
                raise ValueError("windows must be sorted and disjoint")

    def satisfied_by(self, start: Time, duration: Time) -> bool:
        """Check this (uncompiled) condition for an action started at ``start``."""
        end = start + duration
        for w in self.windows:
            if self.timing == AT_START and w.holds_at(start):
                return True
            if self.timing == AT_END and w.holds_at(end):
                return True
            if self.timing == OVER_ALL and w.lo <= start and end <= w.hi:
                return True
        return False


@dataclass(frozen=True, eq=False)
class GroundAction:
    name: str
    args: Tuple[str, ...]
    duration: Time
    pre: frozenset
    add: frozenset
    dele: frozenset
    # merged over-all execution windows; None when the action has no timed condition
    timed_pre: Optional[Tuple[TimeWindow, ...]] = None
    original_timed: Tuple[TimedConditionSpec, ...] = ()

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"{self.label}: duration must be positive")

    @property
    def label(self) -> str:
        return "(" + " ".join((self.name,) + tuple(self.args)) + ")"

    @property
    def key(self) -> Tuple[str, Tuple[str, ...]]:
        return (self.name, self.args)

    def __repr__(self) -> str:
        return f"GroundAction{self.label}"

    def fits_timed_pre(self, start: Time) -> bool:
        if self.timed_pre is None:
            return True
        return any(w.admits(start, self.duration) for w in self.timed_pre)


@dataclass
class ProblemInstance:
    objects: Dict[str, str]
    init: frozenset
    goals: frozenset
    actions: Tuple[GroundAction, ...]
    timed_literals: Dict[Literal, Tuple[TimeWindow, ...]] = field(default_factory=dict)
    name: str = "problem"
    domain_name: str = "domain"
    diagnostics: List[str] = field(default_factory=list)

    def __post_init__(self):
        timed_preds = {l.predicate for l in self.timed_literals}
        for a in self.actions:
            clash = {f.predicate for f in a.add | a.dele} & timed_preds
            if clash:
                raise ValueError(
                    f"timed predicate(s) {sorted(clash)} appear in effects of {a.label}")

    def action_by_label(self) -> Dict[str, GroundAction]:
        return {a.label: a for a in self.actions}


# ---------------------------------------------------------------------------
# timelines and compilation


def build_windows(assertions: Iterable[Tuple[Time, Literal]]) -> Dict[Literal, Tuple[TimeWindow, ...]]:
    """Turn ``(at t L)`` / ``(at t (not L))`` assertions into per-literal windows.

    A positive assertion opens a window and the next negative assertion for
    the same literal closes it; an unclosed window extends to infinity.
    Windows that touch (closed and reopened at the same instant) are merged.
    """
    by_lit: Dict[Literal, List[Tuple[Time, bool]]] = {}
    for t, l in assertions:
        by_lit.setdefault(l.positive(), []).append((as_time(t), not l.negated))
    out: Dict[Literal, Tuple[TimeWindow, ...]] = {}
    for l, events in by_lit.items():
        # closing before opening at equal times lets touching windows merge
        events.sort(key=lambda e: (e[0], e[1]))
        windows: List[TimeWindow] = []
        open_at = None
        for t, positive in events:
            if positive:
                if open_at is not None:
                    raise TimelineError(f"{l}: opened twice (at {open_at} and {t})")
                if windows and windows[-1].hi == t:
                    open_at = windows.pop().lo
                else:
                    open_at = t
            else:
                if open_at is None:
                    raise TimelineError(f"{l}: closed at {t} while not open")
                if t > open_at:
                    windows.append(TimeWindow(open_at, t))
                open_at = None
        if open_at is not None:
            windows.append(TimeWindow(open_at, INF))
        out[l] = tuple(windows)
    return out


def _intersect_one(a: TimeWindow, b: TimeWindow) -> Optional[TimeWindow]:
    if a.lo > b.lo or (a.lo == b.lo and a.lo_strict):
        lo, lo_strict = a.lo, a.lo_strict
    else:
        lo, lo_strict = b.lo, b.lo_strict
    if a.hi < b.hi or (a.hi == b.hi and a.hi_strict):
        hi, hi_strict = a.hi, a.hi_strict
    else:
        hi, hi_strict = b.hi, b.hi_strict
    if not lo < hi:
        return None
    return TimeWindow(lo, hi, lo_strict, hi_strict)


def intersect_windows(xs: Sequence[TimeWindow], ys: Sequence[TimeWindow]) -> List[TimeWindow]:
    """Pairwise intersection of two sorted disjoint window lists (linear sweep)."""
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        w = _intersect_one(xs[i], ys[j])
        if w is not None:
            out.append(w)
        if xs[i].hi < ys[j].hi or (xs[i].hi == ys[j].hi and xs[i].hi_strict):
            i += 1
        else:
            j += 1
    return out


def as_over_all(spec: TimedConditionSpec, duration: Time) -> List[TimeWindow]:
    """Execution windows equivalent to one timed condition."""
    if spec.timing == OVER_ALL:
        return list(spec.windows)
    if spec.timing == AT_START:
        # lo <= s < hi  <=>  s >= lo and s + dur < hi + dur
        return [TimeWindow(w.lo, w.hi + duration, hi_strict=True) for w in spec.windows]
    # lo <= s + dur < hi
    return [TimeWindow(w.lo - duration, w.hi, hi_strict=True) for w in spec.windows]


def merge_timed_conditions(specs: Sequence[TimedConditionSpec], duration: Time) -> List[TimeWindow]:
    merged: Optional[List[TimeWindow]] = None
    for spec in specs:
        ws = as_over_all(spec, duration)
        merged = ws if merged is None else intersect_windows(merged, ws)
    return [w for w in (merged or []) if w.can_fit(duration)]


def compile_timed_conditions(a: GroundAction) -> Optional[GroundAction]:
    """Fold all original timed conditions of ``a`` into one execution-window list.

    Returns ``None`` when the action has timed conditions but no window can
    hold it; such an action can never appear in a valid plan.
    """
    if not a.original_timed:
        return replace(a, timed_pre=None)
    merged = merge_timed_conditions(a.original_timed, a.duration)
    if not merged:
        return None
    return replace(a, timed_pre=tuple(merged))
