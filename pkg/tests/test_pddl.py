import itertools

import pytest

from tempora import bench, pddl
from tempora.model import Literal, TimeWindow
from tempora.validate import Plan, validate_plan

EMPTY_DOMAIN = "(define (domain empty) (:predicates (g)))"
FUEL_DOMAIN = """
(define (domain fuel)
  (:requirements :durative-actions :timed-initial-literals :typing)
  (:types city)
  (:predicates (open-fuelstation ?c - city) (full ?c - city))
  (:durative-action fill
    :parameters (?c - city)
    :duration (= ?duration 3)
    :condition (over all (open-fuelstation ?c))
    :effect (at end (full ?c))))
"""
FUEL_PROBLEM = """
(define (problem fuel-1) (:domain fuel)
  (:objects city1 - city)
  (:init (at 8 (open-fuelstation city1)) (at 12 (not (open-fuelstation city1)))
         (at 15 (open-fuelstation city1)) (at 20 (not (open-fuelstation city1))))
  (:goal (full city1)))
"""


def test_goals_already_true_give_a_valid_empty_plan():
    p = pddl.parse(EMPTY_DOMAIN, "(define (problem e) (:domain empty) (:init (g)) (:goal (g)))")
    assert p.actions == () and validate_plan(p, Plan(())).valid


def test_fuelstation_assertions_make_two_windows():
    p = pddl.parse(FUEL_DOMAIN, FUEL_PROBLEM)
    assert p.timed_literals[Literal("open-fuelstation", ("city1",))] == (TimeWindow(8, 12), TimeWindow(15, 20))
    (fill,) = p.actions
    assert fill.timed_pre[0].lo == 8 and len(fill.timed_pre) == 2


def test_syntax_error_reports_position():
    with pytest.raises(pddl.PddlSyntaxError) as info:
        pddl.parse_domain("(define (domain d)\n  (:predicates (p)\n")
    assert info.value.line >= 1 and "line" in str(info.value)
    with pytest.raises(pddl.PddlSyntaxError) as info:
        pddl.parse_domain("(define (domain d))\n   )")
    assert (info.value.line, info.value.col) == (2, 4)


@pytest.mark.parametrize("body,construct", [
    ("(increase (fuel) 1)", "increase"),
    ("(when (g) (g))", "conditional"),
])
def test_unsupported_effects_are_named(body, construct):
    dom = f"""(define (domain d) (:predicates (g))
      (:durative-action a :parameters () :duration (= ?duration 1)
        :condition (at start (g)) :effect (at end {body})))"""
    with pytest.raises(pddl.UnsupportedFeatureError) as info:
        pddl.parse_domain(dom)
    assert construct in str(info.value)


def test_derived_predicates_are_rejected():
    with pytest.raises(pddl.UnsupportedFeatureError):
        pddl.parse_domain("(define (domain d) (:predicates (g)) (:derived (g) (g)))")


def test_timed_predicate_in_effects_is_rejected():
    dom = FUEL_DOMAIN.replace("(at end (full ?c))", "(at end (open-fuelstation ?c))")
    with pytest.raises(ValueError):
        pddl.parse(dom, FUEL_PROBLEM)


# independent count of consistent typed bindings
_TYPES = {"plane": {"aircraft", "locatable"}, "f0": {"flevel"}, "f1": {"flevel"},
          "f2": {"flevel"}, "f3": {"flevel"}}


def _count_bindings(dom, prob):
    types = dict(_TYPES)
    for o, t in prob.objects:
        types.setdefault(o, set()).update({t, "locatable"} if t in ("person", "aircraft") else {t})
    static = {l for l in prob.init if l.predicate == "next"}
    total = 0
    for s in dom.actions:
        for combo in itertools.product(sorted(types), repeat=len(s.params)):
            b = dict(zip((p for p, _ in s.params), combo))
            if any(t not in types[o] for (_, t), o in zip(s.params, combo)):
                continue
            if any((b[x] == b[y]) != eq for x, y, eq in s.equalities):
                continue
            if all(Literal("next", tuple(b[t] for t in a.terms)) in static
                   for _, a in s.conditions if a.predicate == "next"):
                total += 1
    return total


@pytest.mark.parametrize("seed", range(4))
def test_zeno_grounding_count(seed):
    dtext, ptext = bench.zeno_instance(seed)
    dom, prob = pddl.parse_domain(dtext), pddl.parse_problem(ptext)
    inst = pddl.ground(dom, prob)
    pruned = sum("pruned" in d for d in inst.diagnostics)
    assert len(inst.actions) + pruned == _count_bindings(dom, prob)


def test_problem_round_trip():
    _, ptext = bench.zeno_instance(1, n_windows=3)
    prob = pddl.parse_problem(ptext)
    again = pddl.parse_problem(pddl.write_problem(prob))
    assert sorted(map(str, again.init)) == sorted(map(str, prob.init))
    assert again.timed == prob.timed and again.goals == prob.goals and again.objects == prob.objects
