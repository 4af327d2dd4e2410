import itertools
import random

import pytest

from scenarios import act, fig1_graph, fig1_problem, fig4_graph, problem
from tempora import oracle
from tempora.lagraph import (PROPOSITIONAL, TEMPORAL, GraphError, GraphHasFlawsError, TdaGraph,
                             compute_mutex)
from tempora.model import lit
from tempora.validate import validate_plan


def _solved_graph():
    """The worked three-action graph with its propositional gaps closed."""
    a1 = act("a1", 50, ["p2"], ["p5"])
    a2 = act("a2", 70, ["p3", "p6"], ["p7"])
    a3 = act("a3", 15, ["p1", "p7"], ["p10"], timed=("p", [(25, 50), (75, 125)]))
    p = problem(["p1", "p2", "p3", "p6"], ["p10"], [a1, a2, a3])
    return TdaGraph(p, actions=[a1, a2, a3])


def test_goals_in_init_give_a_flawless_empty_graph():
    p = problem(["g"], ["g"], [act("x", 1, ["g"], ["h"])])
    g = TdaGraph(p)
    assert g.find_flaws() == [] and len(g.extract_plan()) == 0
    assert g.extract_plan().makespan == 0


def test_initial_graph_flags_the_goal():
    g = TdaGraph(fig1_problem())
    assert g.find_flaws() == [(1, PROPOSITIONAL, lit("p10"))]


def test_initial_flaws_are_goals_missing_from_init():
    rng = random.Random(4)
    for _ in range(50):
        p = oracle.random_problem(rng)
        assert len(TdaGraph(p).find_flaws()) == len(p.goals - p.init)


def test_mutex_matches_independent_interference_check():
    p = fig4_graph().problem
    m = compute_mutex(p)
    for a, b in itertools.permutations(p.actions, 2):
        want = any(f in b.pre or f in b.add for f in a.dele) or \
            any(f in a.pre or f in a.add for f in b.dele)
        assert m(a, b) == want == m(b, a)
    assert not any(m(a, a) for a in p.actions)


def test_mutex_examples():
    a, b, c = act("a", 1, add=["f"]), act("b", 1, dele=["f"]), act("c", 1, add=["z"])
    m = compute_mutex(problem([], [], [a, b, c]))
    assert m(a, b) and not m(a, c)
    assert m.blocks_noop(b, lit("f")) and not m.blocks_noop(a, lit("f"))


def test_insert_into_empty_graph():
    p = fig1_problem()
    g = TdaGraph(p)
    g.insert_action(p.actions[0], 1)
    assert g.n == 1 and g.end_level == 2
    assert g.orderings == []


def test_insertion_shifts_later_levels():
    g = fig4_graph()
    anew = next(a for a in g.problem.actions if a.name == "anew")
    g.insert_action(anew, 2)
    assert [nd.action.name for nd in g.nodes] == ["a1", "anew", "a2", "a3"]


def test_insert_level_out_of_range():
    g = fig1_graph()
    with pytest.raises(GraphError):
        g.insert_action(g.problem.actions[0], 6)
    with pytest.raises(GraphError):
        g.remove_action(4)


def test_edit_round_trips_restore_state():
    rng = random.Random(8)
    for _ in range(40):
        p = oracle.random_problem(rng)
        g = TdaGraph(p)
        for _ in range(4):
            g.insert_action(rng.choice(p.actions), rng.randint(1, g.end_level))
        before = g.canonical()
        lv = rng.randint(1, g.end_level)
        g.insert_action(rng.choice(p.actions), lv)
        g.remove_action(lv)
        assert g.canonical() == before
        lv = rng.randint(1, g.n)
        a = g.node_at(lv).action
        g.remove_action(lv)
        g.insert_action(a, lv)
        assert g.canonical() == before


def test_removing_the_only_action_restores_initial_graph():
    p = fig1_problem()
    g = TdaGraph(p)
    fresh = g.canonical()
    g.insert_action(p.actions[2], 1)
    g.remove_action(1)
    assert g.canonical() == fresh


def test_removing_a1_unblocks_p1():
    g = fig1_graph()
    assert g.supporter(3, lit("p1")) is None
    g.remove_action(1)
    assert g.supporter(2, lit("p1")) == "start"


def test_single_early_window_leaves_a3_unscheduled_at_70():
    g = fig1_graph(windows=((25, 50),))
    assert (3, TEMPORAL, 3) in g.find_flaws()
    assert g.t_value(3) == 70


def test_flaws_sorted_by_level():
    rng = random.Random(12)
    for _ in range(50):
        p = oracle.random_problem(rng)
        g = TdaGraph(p, actions=[rng.choice(p.actions) for _ in range(4)])
        levels = [f.level for f in g.find_flaws()]
        assert levels == sorted(levels)


def test_flaws_match_direct_walk():
    rng = random.Random(13)
    for _ in range(50):
        p = oracle.random_problem(rng)
        acts = [rng.choice(p.actions) for _ in range(rng.randint(0, 5))]
        g = TdaGraph(p, actions=acts)
        want = set()
        state = set(p.init)
        for lv, a in enumerate(acts, 1):
            want |= {(lv, f) for f in a.pre if f not in state}
            state = (state - a.dele) | a.add
        want |= {(len(acts) + 1, f) for f in p.goals if f not in state}
        got = {(f.level, f.subject) for f in g.find_flaws() if f.kind == PROPOSITIONAL}
        assert got == want
        temporal = {f.subject for f in g.find_flaws() if f.kind == TEMPORAL}
        assert temporal == set(g.outcome.unscheduled)


def test_extract_plan_requires_flawless_graph():
    with pytest.raises(GraphHasFlawsError):
        fig1_graph().extract_plan()


def test_solved_graph_plan():
    g = _solved_graph()
    pl = g.extract_plan()
    assert pl.makespan == 90
    assert validate_plan(g.problem, pl).valid


def test_dtp_stays_in_lockstep_and_orderings_respect_levels():
    rng = random.Random(17)
    for _ in range(30):
        p = oracle.random_problem(rng)
        g = TdaGraph(p)
        for _ in range(10):
            if g.n and rng.random() < 0.4:
                g.remove_action(rng.randint(1, g.n))
            else:
                g.insert_action(rng.choice(p.actions), rng.randint(1, g.end_level))
            assert g.dtp.canonical() == g.rebuild_dtp().canonical()
            for i, j, _ in g.orderings:
                assert g.level_of(i) < g.level_of(j)


def test_dump_mentions_every_level():
    text = fig1_graph().dump()
    for lv in range(5):
        assert f"level {lv}:" in text
