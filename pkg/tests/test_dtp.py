import random

import pytest
from hypothesis import given, settings, strategies as st

from scenarios import FIG1_WINDOWS, fig1_graph
from tempora import oracle
from tempora.dtp import (END, DtpNode, SchedulingConstraint, build_dtp, classical_clauses,
                         dump_classical, forward_check, incremental_solve, meta_variables,
                         partition_meta_variables, select_value, select_variable, solve_dtp,
                         solve_plus, start_pt)
from tempora.model import TimeWindow
from tempora.stp import ORIGIN


def _names(d, kind):
    return sorted(c.name for c in d.constraints if c.name[0] == kind)


def test_worked_graph_constraint_set():
    d = fig1_graph().dtp
    assert _names(d, "order") == [("order", 1, 3), ("order", 2, 3)]
    assert _names(d, "duration") == [("duration", 1), ("duration", 2), ("duration", 3)]
    [sc] = d.sched
    assert sc.uid == 3 and sc.windows == tuple(TimeWindow(*w) for w in FIG1_WINDOWS)
    dur3 = next(c for c in d.constraints if c.name == ("duration", 3))
    assert {(e.weight) for e in dur3.edges} == {15, -15}


def test_empty_graph_has_only_brackets():
    d = build_dtp([])
    assert [c.name for c in d.constraints] == [("bracket", END)]
    assert solve_plus(d).makespan == 0


def test_windows_must_be_sorted():
    with pytest.raises(ValueError):
        SchedulingConstraint(1, (TimeWindow(5, 9), TimeWindow(0, 3)), 1, 1)


def test_orderings_against_levels_are_rejected():
    with pytest.raises(ValueError):
        build_dtp([DtpNode(1, 1, 5), DtpNode(2, 2, 5)], [(2, 1, "causal")])


def test_partition_of_the_three_window_example():
    d = fig1_graph(windows=FIG1_WINDOWS + ((150, 200),)).dtp
    parts = partition_meta_variables(d)
    assert ("duration", 1) in parts[0] and ("duration", 2) in parts[1]
    assert {("order", 1, 3), ("order", 2, 3), ("duration", 3), ("schedule", 3)} <= set(parts[2])


def test_partition_of_empty_dtp_holds_only_the_end_bracket():
    assert partition_meta_variables(build_dtp([])) == [[("bracket", END)]]


def test_partition_covers_every_meta_variable_once():
    rng = random.Random(3)
    for _ in range(50):
        d = oracle.random_tda_dtp(rng)
        flat = [v for part in partition_meta_variables(d) for v in part]
        assert len(flat) == len(set(flat))
        assert set(flat) == {v.name for v in meta_variables(d) if v.name != ("bound",)}


def test_select_variable_ignores_input_order():
    d = fig1_graph(windows=FIG1_WINDOWS + ((150, 200),)).dtp
    vs = meta_variables(d)
    doms = {v.idx: list(v.values) for v in vs}
    want = select_variable(vs, doms)
    rng = random.Random(0)
    for _ in range(20):
        rng.shuffle(vs)
        assert select_variable(vs, doms) is want


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(1, 20)), min_size=1, max_size=6))
def test_select_value_takes_smallest_lower_bound(pairs):
    dom = [TimeWindow(lo, lo + n) for lo, n in pairs]
    assert select_value(dom).lo == min(lo for lo, _ in pairs)


def test_forward_check_prunes_exactly_the_inconsistent_windows():
    rng = random.Random(5)
    for _ in range(200):
        d = oracle.random_tda_dtp(rng)
        induced = d.stp_part.copy()
        doms = {c.uid: list(c.windows) for c in d.sched}
        forward_check(d.sched, doms, induced)
        for c in d.sched:
            want = [w for w in c.windows if induced.admits(c.edges(w))]
            assert doms[c.uid] == want


def test_worked_graph_prunes_early_window():
    out = solve_plus(fig1_graph().dtp)
    assert out.pruned == {3: (TimeWindow(25, 50),)}
    assert out.assignment.choice[3] == TimeWindow(75, 125)
    assert out.start_of(3) == 75 and out.makespan == 90


def test_no_scheduling_constraints_gives_plain_earliest_schedule():
    d = build_dtp([DtpNode(1, 1, 4), DtpNode(2, 2, 6)], [(1, 2, "causal")])
    out = solve_plus(d)
    assert out.complete and out.start_of(2) == 4 and out.makespan == 10


def test_unsatisfiable_constraint_is_left_unscheduled():
    d = build_dtp([DtpNode(1, 1, 30), DtpNode(2, 2, 5, (TimeWindow(0, 20),))], [(1, 2, "causal")])
    out = solve_plus(d)
    assert not out.complete and out.unscheduled == {2}
    assert out.assignment.choice[2] is None and out.start_of(2) == 30


def test_bound_violation_is_reported():
    d = build_dtp([DtpNode(1, 1, 30)], makespan_bound=30)
    out = solve_plus(d)
    assert out.bound_violated and not out.complete


def test_noop_edit_reproduces_previous_outcome():
    g = fig1_graph()
    prev = g.outcome
    assert incremental_solve(g.dtp, prev, 2).key() == prev.key()


def test_removing_a2_keeps_second_window():
    g = fig1_graph()
    prev = g.outcome
    g.remove_action(2)
    out = incremental_solve(g.dtp, prev, 2)
    assert out.key() == solve_plus(g.dtp).key()
    assert out.assignment.choice[3] == TimeWindow(75, 125) and out.start_of(3) == 75


def test_first_value_is_final_value():
    rng = random.Random(9)
    for _ in range(200):
        d = oracle.random_tda_dtp(rng)
        out = solve_dtp(d)
        if not out.complete:
            continue
        first = {}
        for name, w in out.trace:
            first.setdefault(name, w)
        for s in d.sched:
            assert first[("schedule", s.uid)] == out.assignment.choice[s.uid]


def test_compact_and_classical_forms_agree():
    rng = random.Random(14)
    cfg = oracle.RandomDtpConfig(max_actions=6, max_windows=3)
    for _ in range(150):
        d = oracle.random_tda_dtp(rng, cfg)
        ref = oracle.brute_dtp(d)
        sat, end = oracle.classical_solve(d)
        assert sat == ref.complete
        if sat:
            assert end == ref.makespan


def test_classical_dump_lists_every_clause():
    d = fig1_graph().dtp
    text = dump_classical(d)
    assert text.count(" or ") == len(classical_clauses(d)) == d.classical_size() == 4


def _overlapping_dtp(rng):
    """Windows shaped like compiled at-start conditions: sorted, possibly overlapping."""
    nodes = []
    for lvl in range(1, rng.randint(1, 6) + 1):
        dur, ws = rng.randint(1, 20), None
        if rng.random() < 0.7:
            base = oracle.random_windows(rng, rng.randint(1, 4), 100)
            ws = tuple(TimeWindow(w.lo, w.hi + dur, False, True) for w in base)
        nodes.append(DtpNode(lvl, lvl, dur, ws))
    ords = [(i.uid, j.uid, "causal") for i in nodes for j in nodes
            if i.level < j.level and rng.random() < 0.3]
    return build_dtp(nodes, ords, rng.choice([None, rng.randint(30, 200)]))


def test_overlapping_sorted_windows_still_solved_optimally():
    rng = random.Random(21)
    for _ in range(500):
        d = _overlapping_dtp(rng)
        a, b = solve_plus(d), oracle.brute_dtp(d)
        assert a.complete == b.complete
        if a.complete:
            assert a.makespan == b.makespan


def test_schedule_is_earliest_solution_of_induced_stp():
    rng = random.Random(2)
    for _ in range(100):
        d = oracle.random_tda_dtp(rng)
        out = solve_plus(d)
        assert out.schedule.assignment == out.assignment.induced.earliest_solution().assignment
        assert out.complete == (not out.unscheduled and not out.bound_violated)
        assert out.schedule[ORIGIN] == 0
        for s in d.sched:
            if out.assignment.choice[s.uid] is not None:
                assert out.start_of(s.uid) == out.schedule[start_pt(s.uid)]
