"""Independent plan validator, plus the plan file format.

Nothing here touches the graph or DTP code: plans are checked by replaying
their effects on a timeline.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import (AT_END, AT_START, OVER_ALL, GroundAction, Literal, ProblemInstance, Time,
                    as_time)

PRECONDITION = "precondition"
MUTEX = "mutex-overlap"
WINDOW = "window"
GOAL = "goal"
DURATION = "duration"
UNKNOWN = "unknown-action"


class PlanFormatError(ValueError):
    pass


def format_time(t) -> str:
    """Exact decimal when the value has one, ``p/q`` otherwise."""
    t = as_time(t)
    if isinstance(t, int):
        return str(t)
    den = t.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{t.numerator}/{t.denominator}"
    digits = max(twos, fives)
    scaled = t * 10 ** digits
    sign = "-" if scaled < 0 else ""
    s = str(abs(int(scaled))).rjust(digits + 1, "0")
    whole, frac = s[:-digits], s[-digits:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def parse_time(text: str) -> Time:
    try:
        return as_time(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise PlanFormatError(f"bad time value {text!r}") from exc


@dataclass(frozen=True)
class PlanStep:
    start: Time
    action: Optional[GroundAction]
    duration: Time
    label: str = ""

    @property
    def end(self) -> Time:
        return self.start + self.duration


@dataclass(frozen=True)
class Plan:
    steps: Tuple[PlanStep, ...]

    @staticmethod
    def of(pairs: Sequence[Tuple[Time, GroundAction]]) -> "Plan":
        steps = [PlanStep(as_time(s), a, a.duration, a.label) for s, a in pairs]
        return Plan(tuple(sorted(steps, key=lambda st: st.start)))

    @property
    def makespan(self) -> Time:
        return max((st.end for st in self.steps), default=0)

    def __len__(self):
        return len(self.steps)


@dataclass
class ValidationReport:
    violations: List[Tuple[int, str, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def kinds(self) -> set:
        return {k for _, k, _ in self.violations}

    def add(self, step: int, kind: str, detail: str) -> None:
        self.violations.append((step, kind, detail))

    def render(self) -> str:
        if self.valid:
            return "plan valid\n"
        lines = [f"plan invalid: {len(self.violations)} violation(s)"]
        lines += [f"  step {i}: {k}: {d}" for i, k, d in self.violations]
        return "\n".join(lines) + "\n"

    def machine_lines(self) -> List[str]:
        return [f"VIOLATION\t{k}\t{i}\t{d}" for i, k, d in self.violations] or ["VALID"]


def _interfere(a: GroundAction, b: GroundAction) -> bool:
    for x, y in ((a, b), (b, a)):
        for f in x.dele:
            if f in y.pre or f in y.add:
                return True
    return False


def _timed_ok(p: ProblemInstance, a: GroundAction, s: Time) -> List[str]:
    """Names of the timed conditions of ``a`` that fail when started at ``s``."""
    e = s + a.duration
    bad = []
    if a.original_timed:
        for spec in a.original_timed:
            ws = p.timed_literals.get(spec.literal, spec.windows) if spec.literal else spec.windows
            if spec.timing == AT_START:
                ok = any(w.lo <= s < w.hi for w in ws)
            elif spec.timing == AT_END:
                ok = any(w.lo <= e < w.hi for w in ws)
            else:
                ok = any(w.lo <= s and e <= w.hi for w in ws)
            if not ok:
                bad.append(f"{spec.timing} {spec.literal}")
    elif a.timed_pre is not None:
        if not any(w.admits(s, a.duration) for w in a.timed_pre):
            bad.append("timed precondition")
    return bad


def validate_plan(p: ProblemInstance, plan: Plan) -> ValidationReport:
    rep = ValidationReport()
    known = {id(a) for a in p.actions}
    by_key = {a.key: a for a in p.actions}
    steps: List[Tuple[int, PlanStep, GroundAction]] = []
    for i, st in enumerate(plan.steps):
        a = st.action
        if a is None or (id(a) not in known and by_key.get(a.key) is None):
            rep.add(i, UNKNOWN, st.label or repr(a))
            continue
        if id(a) not in known:
            a = by_key[a.key]
        if st.duration != a.duration:
            rep.add(i, DURATION, f"{a.label} has duration {a.duration}, plan says {st.duration}")
        steps.append((i, PlanStep(st.start, a, a.duration, a.label), a))
        if st.start < 0:
            rep.add(i, PRECONDITION, f"{a.label} starts before time 0")

    # effects happen at action ends; deletes before adds at the same instant
    events: Dict[Time, Tuple[set, set]] = {}
    for _, st, a in steps:
        dl, ad = events.setdefault(st.end, (set(), set()))
        dl.update(a.dele)
        ad.update(a.add)
    times = sorted(events)

    def state_at(t: Time) -> set:
        s = set(p.init)
        for et in times:
            if et > t:
                break
            dl, ad = events[et]
            s -= dl
            s |= ad
        return s

    for i, st, a in steps:
        state = state_at(st.start)
        for f in sorted(a.pre):
            if f not in state:
                rep.add(i, PRECONDITION, f"{f} false at start {st.start} of {a.label}")
                continue
            for j, other, b in steps:
                if j != i and st.start < other.end < st.end and f in b.dele:
                    rep.add(i, PRECONDITION, f"{f} deleted by step {j} during {a.label}")
                    break
        for what in _timed_ok(p, a, st.start):
            rep.add(i, WINDOW, f"{what} violated by {a.label} at {st.start}")

    for (i, si, a), (j, sj, b) in ((x, y) for k, x in enumerate(steps) for y in steps[k + 1:]):
        if si.start < sj.end and sj.start < si.end and _interfere(a, b):
            rep.add(j, MUTEX, f"{a.label} and {b.label} overlap")

    final = state_at(max(times)) if times else set(p.init)
    for g in sorted(p.goals):
        if g not in final:
            rep.add(len(plan.steps), GOAL, f"{g} not achieved")
    return rep


# ---------------------------------------------------------------------------
# plan files

_LINE = re.compile(r"^\s*([-0-9./]+)\s*:\s*\(([^)]*)\)\s*(?:\[\s*([-0-9./]+)\s*\])?\s*$")


def write_plan(plan: Plan, header: Sequence[str] = ()) -> str:
    lines = [f"; {h}" for h in header]
    for st in plan.steps:
        label = st.action.label if st.action is not None else st.label
        lines.append(f"{format_time(st.start)}: {label} [{format_time(st.duration)}]")
    return "\n".join(lines) + "\n"


def read_plan(text: str, p: ProblemInstance) -> Plan:
    table = {a.label: a for a in p.actions}
    steps = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise PlanFormatError(f"line {n}: cannot parse {raw!r}")
        start = parse_time(m.group(1))
        label = "(" + " ".join(m.group(2).lower().split()) + ")"
        a = table.get(label)
        dur = parse_time(m.group(3)) if m.group(3) else (a.duration if a else 0)
        steps.append(PlanStep(start, a, dur, label))
    return Plan(tuple(sorted(steps, key=lambda s: s.start)))
