"""Parser and grounder for a PDDL2.2 subset.

Supported: typed STRIPS durative actions with constant durations, positive
conditions tagged ``at start`` / ``over all`` / ``at end``, add/delete
effects, parameter (in)equality, and timed initial literals.  Numeric
fluents, derived predicates, conditional and quantified effects are rejected
with :class:`UnsupportedFeatureError`.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import (AT_END, AT_START, OVER_ALL, GroundAction, Literal, ProblemInstance,
                    TimedConditionSpec, TimeWindow, as_time, build_windows,
                    compile_timed_conditions)


class PddlSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnsupportedFeatureError(ValueError):
    def __init__(self, construct: str):
        super().__init__(f"unsupported PDDL feature: {construct}")
        self.construct = construct


class Sym(str):
    """A token carrying its source position."""

    line = 0
    col = 0


class SList(list):
    line = 0
    col = 0


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s()]+")


def tokenize(text: str) -> List[Sym]:
    out = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        if not tok[0].isspace() and tok[0] != ";":
            s = Sym(tok.lower())
            s.line, s.col = line, m.start() - line_start + 1
            out.append(s)
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = m.start() + tok.rfind("\n") + 1
    return out


def read_sexpr(text: str) -> SList:
    tokens = tokenize(text)
    if not tokens:
        raise PddlSyntaxError("empty input", 1, 1)
    stack: List[SList] = []
    result = None
    for tok in tokens:
        if tok == "(":
            node = SList()
            node.line, node.col = tok.line, tok.col
            if stack:
                stack[-1].append(node)
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise PddlSyntaxError("unbalanced ')'", tok.line, tok.col)
            done = stack.pop()
            if not stack:
                if result is not None:
                    raise PddlSyntaxError("trailing expression", done.line, done.col)
                result = done
        else:
            if not stack:
                raise PddlSyntaxError(f"unexpected token {tok!r}", tok.line, tok.col)
            stack[-1].append(tok)
    if stack:
        raise PddlSyntaxError("unbalanced '(' (missing ')')", stack[-1].line, stack[-1].col)
    return result


def _where(node) -> Tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, list):
        raise PddlSyntaxError(f"expected {what}", *_where(node))
    return node


def _is_number(tok) -> bool:
    if isinstance(tok, list):
        return False
    try:
        Fraction(tok)
        return True
    except ValueError:
        return False


def parse_typed_list(items: Sequence) -> List[Tuple[str, str]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)]."""
    out, pending = [], []
    i = 0
    while i < len(items):
        tok = items[i]
        if isinstance(tok, list):
            if tok and tok[0] == "either":
                raise UnsupportedFeatureError("either types")
            raise PddlSyntaxError("unexpected list in typed list", *_where(tok))
        if tok == "-":
            if i + 1 >= len(items) or isinstance(items[i + 1], list):
                raise PddlSyntaxError("missing type after '-'", *_where(tok))
            out.extend((p, str(items[i + 1])) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(str(tok))
        i += 1
    out.extend((p, "object") for p in pending)
    return out


# ---------------------------------------------------------------------------
# lifted structures


@dataclass
class Atom:
    predicate: str
    terms: Tuple[str, ...]


@dataclass
class DurativeSchema:
    name: str
    params: List[Tuple[str, str]]
    duration: object
    conditions: List[Tuple[str, Atom]]  # (timing, atom)
    add: List[Atom]
    dele: List[Atom]
    equalities: List[Tuple[str, str, bool]]  # (t1, t2, must_equal)
    start_effects: bool = False


@dataclass
class Domain:
    name: str
    types: Dict[str, str] = field(default_factory=dict)
    constants: List[Tuple[str, str]] = field(default_factory=list)
    predicates: Dict[str, int] = field(default_factory=dict)
    actions: List[DurativeSchema] = field(default_factory=list)


@dataclass
class Problem:
    name: str
    domain_name: str
    objects: List[Tuple[str, str]] = field(default_factory=list)
    init: List[Literal] = field(default_factory=list)
    timed: List[Tuple[object, Literal]] = field(default_factory=list)
    goals: List[Literal] = field(default_factory=list)
    metric: Optional[str] = None


def _atom(node) -> Atom:
    node = _expect_list(node, "atom")
    if not node or isinstance(node[0], list):
        raise PddlSyntaxError("malformed atom", *_where(node))
    for t in node[1:]:
        if isinstance(t, list):
            raise UnsupportedFeatureError(f"nested term in ({node[0]} ...)")
    return Atom(str(node[0]), tuple(str(t) for t in node[1:]))


_NUMERIC = {"increase", "decrease", "assign", "scale-up", "scale-down", "<", ">", "<=", ">="}


def _conjuncts(node) -> List:
    node = _expect_list(node, "formula")
    if not node:
        return []
    if node[0] == "and":
        out = []
        for sub in node[1:]:
            out.extend(_conjuncts(sub))
        return out
    return [node]


def _parse_condition(node, schema_name: str, durative: bool):
    conds, eqs = [], []
    for c in _conjuncts(node):
        head = c[0] if c else None
        if durative and head in ("at", "over"):
            if head == "at" and len(c) == 3 and c[1] in ("start", "end"):
                timing = AT_START if c[1] == "start" else AT_END
            elif head == "over" and len(c) == 3 and c[1] == "all":
                timing = OVER_ALL
            else:
                raise PddlSyntaxError("malformed timed condition", *_where(c))
            for inner in _conjuncts(c[2]):
                _classify_condition(inner, timing, conds, eqs)
        elif durative:
            raise PddlSyntaxError(
                f"durative condition in {schema_name} lacks a time specifier", *_where(c))
        else:
            _classify_condition(c, OVER_ALL, conds, eqs)
    return conds, eqs


def _classify_condition(c, timing, conds, eqs):
    head = c[0] if c else None
    if head == "=":
        eqs.append((str(c[1]), str(c[2]), True))
    elif head == "not":
        inner = _expect_list(c[1], "negated atom")
        if inner and inner[0] == "=":
            eqs.append((str(inner[1]), str(inner[2]), False))
        else:
            raise UnsupportedFeatureError("negative preconditions")
    elif head in ("or", "imply", "exists", "forall"):
        raise UnsupportedFeatureError(f"{head} in conditions")
    elif head in _NUMERIC:
        raise UnsupportedFeatureError(f"numeric condition ({head} ...)")
    else:
        conds.append((timing, _atom(c)))


def _parse_effects(node, schema: DurativeSchema):
    for e in _conjuncts(node):
        head = e[0] if e else None
        if head == "at" and len(e) == 3 and e[1] in ("start", "end"):
            if e[1] == "start":
                schema.start_effects = True
            inner_list = _conjuncts(e[2])
        else:
            raise PddlSyntaxError("durative effect lacks 'at start'/'at end'", *_where(e))
        for inner in inner_list:
            h = inner[0] if inner else None
            if h == "not":
                schema.dele.append(_atom(inner[1]))
            elif h in ("when", "forall"):
                raise UnsupportedFeatureError("conditional effects" if h == "when" else "forall effects")
            elif h in _NUMERIC:
                raise UnsupportedFeatureError(f"numeric effect ({h} ...)")
            else:
                schema.add.append(_atom(inner))


def _parse_duration(node, name):
    node = _expect_list(node, "duration constraint")
    if len(node) == 3 and node[0] == "=" and node[1] == "?duration" and _is_number(node[2]):
        return as_time(Fraction(str(node[2])))
    raise UnsupportedFeatureError(f"non-constant duration in {name}")


def parse_domain(text: str) -> Domain:
    root = read_sexpr(text)
    if len(root) < 2 or root[0] != "define":
        raise PddlSyntaxError("expected (define ...)", *_where(root))
    header = _expect_list(root[1], "(domain name)")
    if len(header) != 2 or header[0] != "domain":
        raise PddlSyntaxError("expected (domain <name>)", *_where(header))
    dom = Domain(str(header[1]))
    for sec in root[2:]:
        sec = _expect_list(sec, "domain section")
        key = sec[0] if sec else None
        if key == ":requirements":
            for r in sec[1:]:
                if r in (":fluents", ":numeric-fluents", ":derived-predicates",
                         ":conditional-effects", ":continuous-effects",
                         ":duration-inequalities"):
                    raise UnsupportedFeatureError(f"requirement {r}")
        elif key == ":types":
            for t, parent in parse_typed_list(sec[1:]):
                dom.types[t] = parent
        elif key == ":constants":
            dom.constants.extend(parse_typed_list(sec[1:]))
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate declaration")
                dom.predicates[str(p[0])] = len(parse_typed_list(p[1:]))
        elif key == ":functions":
            raise UnsupportedFeatureError("numeric fluents (:functions)")
        elif key == ":derived":
            raise UnsupportedFeatureError("derived predicates")
        elif key == ":action":
            raise UnsupportedFeatureError("non-durative :action")
        elif key == ":durative-action":
            dom.actions.append(_parse_durative(sec))
        else:
            raise PddlSyntaxError(f"unknown domain section {key}", *_where(sec))
    return dom


def _parse_durative(sec) -> DurativeSchema:
    name = str(sec[1])
    fields = {}
    i = 2
    while i < len(sec):
        k = sec[i]
        if isinstance(k, list) or not k.startswith(":") or i + 1 >= len(sec):
            raise PddlSyntaxError(f"malformed durative action {name}", *_where(k))
        fields[str(k)] = sec[i + 1]
        i += 2
    params = parse_typed_list(_expect_list(fields.get(":parameters", SList()), "parameters"))
    if ":duration" not in fields:
        raise PddlSyntaxError(f"{name} has no :duration", *_where(sec))
    schema = DurativeSchema(name, params, _parse_duration(fields[":duration"], name), [], [], [], [])
    if ":condition" in fields:
        schema.conditions, schema.equalities = _parse_condition(fields[":condition"], name, True)
    if ":effect" in fields:
        _parse_effects(fields[":effect"], schema)
    return schema


def _literal(node) -> Literal:
    a = _atom(node)
    return Literal(a.predicate, a.terms)


def parse_problem(text: str) -> Problem:
    root = read_sexpr(text)
    if len(root) < 2 or root[0] != "define":
        raise PddlSyntaxError("expected (define ...)", *_where(root))
    header = _expect_list(root[1], "(problem name)")
    if len(header) != 2 or header[0] != "problem":
        raise PddlSyntaxError("expected (problem <name>)", *_where(header))
    prob = Problem(str(header[1]), "")
    for sec in root[2:]:
        sec = _expect_list(sec, "problem section")
        key = sec[0] if sec else None
        if key == ":domain":
            prob.domain_name = str(sec[1])
        elif key == ":requirements":
            pass
        elif key == ":objects":
            prob.objects.extend(parse_typed_list(sec[1:]))
        elif key == ":init":
            for item in sec[1:]:
                item = _expect_list(item, "init fact")
                if item and item[0] == "at" and len(item) == 3 and _is_number(item[1]) \
                        and isinstance(item[2], list):
                    t = as_time(Fraction(str(item[1])))
                    inner = item[2]
                    if inner and inner[0] == "not":
                        l = _literal(inner[1])
                        prob.timed.append((t, Literal(l.predicate, l.args, True)))
                    else:
                        prob.timed.append((t, _literal(inner)))
                elif item and item[0] == "=":
                    raise UnsupportedFeatureError("numeric fluents in :init")
                else:
                    prob.init.append(_literal(item))
        elif key == ":goal":
            for g in _conjuncts(sec[1]):
                if g and g[0] in ("not", "or", "forall", "exists", "imply"):
                    raise UnsupportedFeatureError(f"{g[0]} in goals")
                if g and g[0] in ("at", "over") and len(g) == 3 and not isinstance(g[1], list) \
                        and g[1] in ("end", "all", "start"):
                    raise UnsupportedFeatureError("timed goals")
                prob.goals.append(_literal(g))
        elif key == ":metric":
            body = " ".join(str(x) for x in _flatten(sec[1:]))
            if body not in ("minimize total-time", "minimize ( total-time )"):
                raise UnsupportedFeatureError(f"metric {body}")
            prob.metric = "total-time"
        else:
            raise PddlSyntaxError(f"unknown problem section {key}", *_where(sec))
    return prob


def _flatten(items):
    for x in items:
        if isinstance(x, list):
            yield "("
            yield from _flatten(x)
            yield ")"
        else:
            yield x


# ---------------------------------------------------------------------------
# grounding


def _objects_by_type(types: Dict[str, str], objects: Sequence[Tuple[str, str]]) -> Dict[str, List[str]]:
    def ancestors(t):
        seen = [t]
        while t in types and types[t] != t and types[t] not in seen:
            t = types[t]
            seen.append(t)
        if "object" not in seen:
            seen.append("object")
        return seen

    out: Dict[str, List[str]] = {}
    for obj, t in objects:
        for a in ancestors(t):
            lst = out.setdefault(a, [])
            if obj not in lst:
                lst.append(obj)
    return out


def ground(dom: Domain, prob: Problem) -> ProblemInstance:
    """Instantiate every schema over type-consistent bindings.

    Bindings violating a static precondition (a predicate no action changes
    and no timed literal mentions) are dropped, as are actions whose merged
    timed precondition has no usable window; the latter are reported in
    ``diagnostics``.
    """
    if prob.domain_name and prob.domain_name != dom.name:
        raise ValueError(f"problem is for domain {prob.domain_name!r}, not {dom.name!r}")
    objects = list(dom.constants) + [o for o in prob.objects if o not in dom.constants]
    by_type = _objects_by_type(dom.types, objects)
    init = frozenset(prob.init)
    timed_preds = {l.predicate for _, l in prob.timed}
    fluent = {a.predicate for s in dom.actions for a in s.add + s.dele}
    clash = timed_preds & fluent
    if clash:
        raise ValueError(f"timed literal predicate(s) {sorted(clash)} appear in action effects")
    assertions = list(prob.timed)
    for f in init:
        if f.predicate in timed_preds:
            assertions.append((0, f))
    assertions.sort(key=lambda x: x[0])
    timelines = build_windows(assertions)
    static_preds = set(dom.predicates) - fluent - timed_preds

    diagnostics = []
    actions = []
    for schema in dom.actions:
        if schema.start_effects:
            diagnostics.append(f"{schema.name}: at-start effects treated as at-end")
        domains = [by_type.get(t, []) for _, t in schema.params]
        names = [p for p, _ in schema.params]
        for combo in itertools.product(*domains):
            b = dict(zip(names, combo))

            def sub(term):
                return b.get(term, term)

            if any((sub(x) == sub(y)) != eq for x, y, eq in schema.equalities):
                continue
            pre, timed = set(), {}
            ok = True
            for timing, atom in schema.conditions:
                l = Literal(atom.predicate, tuple(sub(t) for t in atom.terms))
                if atom.predicate in timed_preds:
                    timed.setdefault((l, timing), None)
                elif atom.predicate in static_preds:
                    if l not in init:
                        ok = False
                        break
                else:
                    pre.add(l)
            if not ok:
                continue
            add = frozenset(Literal(a.predicate, tuple(sub(t) for t in a.terms)) for a in schema.add)
            dele = frozenset(Literal(a.predicate, tuple(sub(t) for t in a.terms)) for a in schema.dele)
            specs = tuple(TimedConditionSpec(l, timing, timelines.get(l, ()))
                          for (l, timing) in timed)
            act = GroundAction(schema.name, tuple(combo), schema.duration, frozenset(pre),
                               add, dele, None, specs)
            compiled = compile_timed_conditions(act)
            if compiled is None:
                diagnostics.append(f"{act.label}: no time window can hold it; pruned")
                continue
            actions.append(compiled)
    init_fluents = frozenset(f for f in init if f.predicate not in timed_preds)
    actions.sort(key=lambda a: a.key)
    return ProblemInstance(
        objects=dict(objects), init=init_fluents, goals=frozenset(prob.goals),
        actions=tuple(actions), timed_literals=timelines, name=prob.name,
        domain_name=dom.name, diagnostics=diagnostics)


def parse(domain_text: str, problem_text: str) -> ProblemInstance:
    return ground(parse_domain(domain_text), parse_problem(problem_text))


def load(domain_path, problem_path) -> ProblemInstance:
    with open(domain_path) as fd, open(problem_path) as fp:
        return parse(fd.read(), fp.read())


# ---------------------------------------------------------------------------
# writing problems back out (used by the benchmark generator)


def _fmt_num(t) -> str:
    from .validate import format_time
    return format_time(t)


def write_problem(prob: Problem) -> str:
    lines = [f"(define (problem {prob.name})", f"  (:domain {prob.domain_name})"]
    if prob.objects:
        by_t: Dict[str, List[str]] = {}
        for o, t in prob.objects:
            by_t.setdefault(t, []).append(o)
        objs = " ".join(f"{' '.join(os)} - {t}" for t, os in by_t.items())
        lines.append(f"  (:objects {objs})")
    lines.append("  (:init")
    for f in prob.init:
        lines.append(f"    {f}")
    for t, l in prob.timed:
        lines.append(f"    (at {_fmt_num(t)} {l})")
    lines.append("  )")
    lines.append("  (:goal (and " + " ".join(str(g) for g in prob.goals) + "))")
    if prob.metric:
        lines.append("  (:metric minimize (total-time))")
    lines.append(")")
    return "\n".join(lines) + "\n"
