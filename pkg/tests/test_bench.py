import random
from fractions import Fraction

import pytest

from scenarios import fig1_graph
from tempora import bench, pddl
from tempora.dtp import solve_plus
from tempora.model import Literal


def test_single_method_one_window_spans_the_makespan():
    assert bench.method_windows(bench.METHOD_I, 1, t=40) == [(0, 40)]


def test_method_one_splits_into_odd_parts():
    assert bench.method_windows(bench.METHOD_I, 3, t=10) == [(0, 2), (4, 6), (8, 10)]
    assert bench.method_windows(bench.METHOD_I, 2, t=10)[0] == (0, Fraction(10, 3))


def test_method_two_windows_have_the_given_length():
    ws = bench.method_windows(bench.METHOD_II, 4, d=15)
    assert all(hi - lo == 15 for lo, hi in ws) and ws[-1][1] == 15 * 7


@pytest.mark.parametrize("args", [(bench.METHOD_I, 0, 5, None), (bench.METHOD_I, 2, None, None),
                                  (bench.METHOD_II, 2, None, 0), ("III", 1, 5, 5)])
def test_bad_recipes(args):
    with pytest.raises(ValueError):
        bench.method_windows(*args)


def test_add_windows_replaces_initial_truth():
    _, ptext = bench.zeno_instance(0, n_windows=1)
    prob = pddl.parse_problem(ptext)
    lits = bench.timed_predicate_literals(prob, bench.ZENO_TIMED)
    out = bench.add_windows(prob, lits, [(1, 3), (5, 9)])
    assert not any(l.predicate == bench.ZENO_TIMED for l in out.init)
    assert len(out.timed) == 4 * len(lits)
    inst = pddl.ground(pddl.parse_domain(bench.ZENO_DOMAIN), out)
    assert all(len(ws) == 2 for ws in inst.timed_literals.values())


def test_window_predicates_are_static_over_all_conditions():
    assert bench.window_predicates(pddl.parse_domain(bench.ZENO_DOMAIN)) == ["open-station"]
    assert bench.window_predicates(pddl.parse_domain(bench.ROVERS_DOMAIN)) == ["in_sun"]
    assert bench.max_constrained_duration(pddl.parse_domain(bench.ROVERS_DOMAIN), ["in_sun"]) == 12


def test_summary_of_nothing():
    assert set(bench.summarize([]).values()) == {0}


def test_recorder_sees_the_worked_dtp(tmp_path):
    log = tmp_path / "ev.jsonl"
    d = fig1_graph().dtp
    with bench.StatsRecorder(log_path=str(log)) as rec:
        solve_plus(d)
    (ev,) = rec.events
    assert ev.satisfiable and ev.scheduling == 1 and ev.windows == 2
    assert bench.read_events(str(log)) == rec.events
    row = bench.summarize(rec.events)
    assert row["dtps"] == 1 and row["max_sc"] == 1 and row["max_win"] == 2
    assert "sat_dtps" in bench.format_table({"fig": row}).splitlines()[0]


def test_recorder_detaches():
    d = fig1_graph().dtp
    with bench.StatsRecorder() as rec:
        pass
    solve_plus(d)
    assert rec.events == []


def test_scaling_dtp_shape():
    d = bench.scaling_dtp(random.Random(0), 6, 3)
    assert len(d.sched) == 6 and all(len(c.windows) == 3 for c in d.sched)
