import math
import random

import pytest

from scenarios import act, fig1_problem, fig4_graph, problem
from tempora import bench, oracle, pddl
from tempora.dtp import start_pt
from tempora.heuristics import (INF, Heuristics, UndefinedSlackError, UnreachableGoalError,
                                compute_eft, compute_lft, reachability_information,
                                relaxed_time_plan, required_actions, slack, successors)
from tempora.lagraph import PROPOSITIONAL, Flaw, TdaGraph
from tempora.model import lit
from tempora.search import SearchConfig, plan
from tempora.stp import ORIGIN, StpEdge


def test_eft_without_windows():
    assert compute_eft(act("a", 7), 3) == 10
    assert compute_lft(act("a", 7)) == INF


def test_eft_skips_to_a_later_window():
    a = act("a", 5, timed=("w", [(0, 4), (10, 20)]))
    assert compute_eft(a, 0) == 15
    assert compute_eft(a, 14) == 19
    assert compute_eft(a, 16) == 21  # past the last window: plain t + Dur


def test_base_facts_cost_nothing():
    t = reachability_information({lit("g")}, [])
    assert t.num_acts_f[lit("g")] == 0 and t.et_of(lit("g")) == 0
    assert required_actions({lit("g")}, [lit("g")], t) == 0


def _chain(n):
    return [act(f"s{i}", 2 + i, [f"f{i}"], [f"f{i + 1}"]) for i in range(n)]


def test_chain_counts_and_times():
    acts = _chain(5)
    t = reachability_information({lit("f0")}, acts)
    for k in range(6):
        assert t.num_acts_f[lit(f"f{k}")] == k
        assert t.et_of(lit(f"f{k}")) == sum(2 + i for i in range(k))
    assert required_actions({lit("f0")}, [lit("f3")], t) == 3


def test_diamond_shares_the_common_achiever():
    top = act("top", 1, ["s"], ["m"])
    left, right = act("l", 1, ["m"], ["x"]), act("r", 1, ["m"], ["y"])
    t = reachability_information({lit("s")}, [top, left, right])
    assert required_actions({lit("s")}, [lit("x"), lit("y")], t) == 3
    assert t.num_acts_f[lit("x")] + t.num_acts_f[lit("y")] == 4


def test_unreachable_goal_raises():
    t = reachability_information({lit("s")}, [])
    with pytest.raises(UnreachableGoalError):
        required_actions({lit("s")}, [lit("nowhere")], t)


def _fit(a, t):
    """Earliest admitted finish from start bound t, by direct window scan."""
    if a.timed_pre is None:
        return t + a.duration
    for w in a.timed_pre:
        s = max(t, w.lo)
        if w.admits(s, a.duration):
            return s + a.duration
    return None


def _relaxed_times(base, actions):
    et = {f: 0 for f in base}
    changed = True
    while changed:
        changed = False
        for a in actions:
            if not a.pre <= et.keys():
                continue
            fin = _fit(a, max((et[f] for f in a.pre), default=0))
            if fin is None:
                continue
            for f in a.add:
                if fin < et.get(f, INF):
                    et[f] = fin
                    changed = True
    return et


def test_fact_times_match_relaxation_oracle():
    rng = random.Random(31)
    for _ in range(200):
        p = oracle.random_problem(rng)
        t = reachability_information(p.init, p.actions)
        assert t.et == _relaxed_times(p.init, p.actions)
        assert t.iterations < 1000
        assert all(required_actions(p.init, [g], t) <= t.num_acts_f[g] for g in t.et)


def test_eft_is_a_lower_bound_in_real_plans():
    for k in range(6):
        p = pddl.parse(*bench.zeno_instance(k, n_windows=2))
        t = reachability_information(p.init, p.actions)
        for st in plan(p, SearchConfig(seed=k)).plan.steps:
            assert st.end >= t.eft[st.action]


def test_relaxed_plan_is_delete_free_executable():
    rng = random.Random(32)
    for _ in range(100):
        p = oracle.random_problem(rng)
        t = reachability_information(p.init, p.actions)
        goals = [g for g in p.goals if g in t.et]
        acts, _ = relaxed_time_plan(goals, {f: 0 for f in p.init}, table=t, problem=p)
        state, left = set(p.init), list(acts)
        while left:
            ready = [a for a in left if a.pre <= state]
            assert ready, "relaxed plan is not executable"
            for a in ready:
                state |= a.add
                left.remove(a)
        assert set(goals) <= state


def test_goals_in_base_need_no_actions():
    p = fig1_problem()
    t = reachability_information(p.init, p.actions)
    assert relaxed_time_plan([lit("p1")], {lit("p1"): 4}, table=t, problem=p) == ([], 4)


def test_single_achiever_is_chosen():
    p = fig1_problem()
    h = Heuristics(p)
    g = TdaGraph(p)
    from tempora.heuristics import PlanContext

    rp = h.planner(g, 1, PlanContext(g, 1))
    assert rp.best_action(lit("p5")).name == "a1"


def _fig4_insertion():
    g = fig4_graph()
    by = {a.name: a for a in g.problem.actions}
    return g, by, Heuristics(g.problem).evaluate_insertion(g, by["anew"], 2)


def test_worked_insertion_breakdown():
    g, by, res = _fig4_insertion()
    assert res.detail["I"] == 0 and res.detail["II"] == 1 and res.detail["III"] == 1
    assert {a.name for a in res.detail["acts"]} == {"b2", "b3", "anew"}
    assert res.search_cost == 5


def test_worked_slack_is_35():
    g = fig4_graph()
    anew = next(a for a in g.problem.actions if a.name == "anew")
    g.insert_action(anew, 2)
    assert slack(g, g.node_at(2).uid, g.node_at(4).uid) == 35


def test_slack_without_windows_is_infinite():
    p = fig1_problem()
    by = {a.name: a for a in p.actions}
    g = TdaGraph(p, actions=[by["a1"], by["a2"]])
    assert slack(g, g.node_at(1).uid, g.node_at(2).uid) == math.inf


def test_slack_of_unscheduled_target_is_undefined():
    from scenarios import fig1_graph

    g = fig1_graph(windows=((25, 50),))
    with pytest.raises(UndefinedSlackError):
        slack(g, 1, 3)


def test_slack_matches_delay_search():
    rng = random.Random(33)
    cfg = oracle.RandomProblemConfig(facts=5, actions=8, timed_prob=0.7)
    checked = 0
    for _ in range(150):
        p = oracle.random_problem(rng, cfg)
        g = TdaGraph(p, actions=[rng.choice(p.actions) for _ in range(4)])
        choice = g.outcome.assignment.choice
        for nd in g.nodes:
            for j in successors(g, nd.uid):
                if choice.get(j) is None:
                    continue
                s = slack(g, nd.uid, j)
                if s == math.inf:
                    continue
                t_i = g.t_value(g.level_of(nd.uid))

                def delayed(d):
                    stp = g.dtp.stp_part.copy()
                    for c in g.dtp.sched:
                        w = choice.get(c.uid)
                        if w is not None and c.uid != nd.uid:
                            es = c.edges(w)
                            for e in (es if c.uid == j else es[:1]):
                                stp.assert_edge(e)
                    stp.assert_edge(StpEdge(start_pt(nd.uid), ORIGIN, -(t_i + d)))
                    return stp.is_consistent()

                assert delayed(s) and not delayed(s + 1)
                checked += 1
    assert checked > 20


def test_plain_insertion_counts_only_the_action():
    p = fig1_problem()
    g = TdaGraph(p)
    a1 = next(a for a in p.actions if a.name == "a1")
    res = Heuristics(p).evaluate_insertion(g, a1, 1)
    assert res.detail["acts"] == [a1]
    assert (res.detail["I"], res.detail["II"], res.detail["III"]) == (0, 0, 0)


def test_removing_a_node_that_supports_nothing_costs_zero():
    x = act("x", 3, ["missing"], ["junk"])
    p = problem(["g"], ["g"], [x])
    g = TdaGraph(p, actions=[x])
    flaw = Flaw(1, PROPOSITIONAL, lit("missing"))
    assert g.find_flaws() == [flaw]
    assert Heuristics(p).evaluate_removal(g, 1, flaw).search_cost == 0


def test_empty_initial_state_still_fires_unconditioned_actions():
    x = act("x", 4, [], ["f"])
    y = act("y", 3, ["f"], ["g"])
    t = reachability_information([], [x, y])
    assert t.et_of(lit("f")) == 4 and t.et_of(lit("g")) == 7
