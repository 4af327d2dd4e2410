import random

import pytest

from scenarios import act, fig1_graph, problem
from tempora import oracle
from tempora.dtp import BudgetExceededError, DtpNode, build_dtp, solve_plus
from tempora.model import TimeWindow


def test_brute_dtp_on_worked_graph():
    out = oracle.brute_dtp(fig1_graph().dtp)
    assert out.complete and out.makespan == 90
    assert list(out.assignment.choice.values()) == [TimeWindow(75, 125)]


def test_brute_dtp_budget_is_explicit():
    ws = tuple(TimeWindow(10 * k, 10 * k + 5) for k in range(10))
    d = build_dtp([DtpNode(i, i, 1, ws) for i in range(1, 6)])
    with pytest.raises(BudgetExceededError):
        oracle.brute_dtp(d, budget=10 ** 4)


def test_without_windows_there_is_one_combination():
    d = build_dtp([DtpNode(1, 1, 4), DtpNode(2, 2, 6)], [(1, 2, "causal")])
    out = oracle.brute_dtp(d)
    assert out.complete and out.makespan == 10 and out.stats.window_checks == 0


def test_classical_expansion_agrees_with_window_enumeration():
    rng = random.Random(3)
    for _ in range(150):
        d = oracle.random_tda_dtp(rng, oracle.RandomDtpConfig(max_actions=5, max_windows=3))
        ref = oracle.brute_dtp(d)
        sat, end = oracle.classical_solve(d)
        assert sat == ref.complete
        if sat:
            assert end == ref.makespan


def test_random_problem_goals_are_reachable_without_windows():
    rng = random.Random(5)
    for _ in range(30):
        p = oracle.random_problem(rng)
        assert p.goals and all(a.duration > 0 for a in p.actions)


def test_brute_plan_with_goals_already_true():
    p = problem(["g"], ["g"], [act("x", 3, [], ["g"])])
    assert oracle.brute_plan(p, 3).steps == ()


def test_brute_plan_waits_for_a_window():
    x = act("x", 5, [], ["f"])
    y = act("y", 4, ["f"], ["g"], timed=("w", [(30, 40)]))
    pl = oracle.brute_plan(problem([], ["g"], [x, y]), 3)
    assert pl.makespan == 34
    assert pl.steps[-1].action.name == "y" and pl.steps[-1].start == 30


def test_brute_plan_prefers_the_shorter_route():
    slow = act("slow", 50, [], ["g"])
    a = act("a", 10, [], ["f"])
    b = act("b", 10, ["f"], ["g"])
    pl = oracle.brute_plan(problem([], ["g"], [slow, a, b]), 3)
    assert pl.makespan == 20


def test_brute_plan_reports_nothing_beyond_its_length():
    chain = [act(f"c{i}", 1, [f"f{i}"] if i else [], [f"f{i + 1}"]) for i in range(4)]
    assert oracle.brute_plan(problem([], ["f4"], chain), 3) is None


def test_solve_plus_matches_brute_on_random_dtps():
    rng = random.Random(11)
    for _ in range(200):
        d = oracle.random_tda_dtp(rng)
        a, b = solve_plus(d), oracle.brute_dtp(d)
        assert a.complete == b.complete
        if a.complete:
            assert a.makespan == b.makespan
