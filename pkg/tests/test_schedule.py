"""Schedule decoding, arithmetic re-validation, metrics, and replay tiling."""
from __future__ import annotations

from dataclasses import replace

import pytest
from helpers import (
    chain_toy,
    immediate_fusion_toy,
    solve_pipeline,
    wait_fusion_toy,
)

from fusionsched.expansion import build_instance_table
from fusionsched.schedule import (
    Schedule,
    ScheduledInstance,
    eval_metrics,
    freshness_warnings,
    replay,
    trace_lines,
    validate,
)


def hand_schedule(dag, table, rows):
    """rows: (task, index, core, start, uses) with wcet-derived finishes."""
    entries = [
        ScheduledInstance(
            t, j, table.phase_of(t, j), core, start,
            start + dag.task(t).wcet, dict(uses),
        )
        for t, j, core, start, uses in rows
    ]
    return Schedule(
        case=dag.name, hp=table.hp, k=table.k, delta=table.delta,
        cores=dag.cores, entries=entries,
    )


def test_hand_layout_metrics_are_exact():
    dag = chain_toy()
    table = build_instance_table(dag, 2)
    sched = hand_schedule(
        dag, table,
        [
            ("s", 1, 0, 2, {}),
            ("a", 1, 0, 3, {}),
            ("s", 2, 0, 4, {}),
            ("a", 2, 0, 5, {}),
        ],
    )
    assert validate(sched, dag, table) == []
    report = eval_metrics(sched, dag, table)
    assert report.per_sink["a"] == {"mrt": 6, "mtd": 0, "paoi": 2, "ms": 6}
    assert report.wcrt[("s", "a")] == 2
    assert report.level_values == [16.0]
    assert report.objective == 16.0
    assert report.value("paoi", "a") == 2
    assert report.value("wcrt", ("s", "a")) == 2


def test_validate_catches_corruptions():
    dag = wait_fusion_toy()
    table, out, sched, _ = solve_pipeline(dag)
    assert validate(sched, dag, table) == []

    def mutated(**kw):
        k = kw.pop("key")
        entries = [replace(e, **kw) if (e.task, e.index) == k else e for e in sched.entries]
        return replace(sched, entries=entries)

    bad_core = mutated(key=("wf", 1), core=7)
    assert any("core" in v for v in validate(bad_core, dag, table))

    bad_len = mutated(key=("wf", 1), finish=sched.by_key()[("wf", 1)].finish + 3)
    assert any("wcet" in v for v in validate(bad_len, dag, table))

    early = mutated(key=("s1", 2), start=0, finish=1)
    assert any("release" in v or "previous" in v for v in validate(early, dag, table))

    stale = mutated(key=("wf", 2), uses={"s1": 1, "s2": 1})
    assert validate(stale, dag, table)  # round reuse breaks strict freshness

    missing = replace(sched, entries=sched.entries[1:])
    assert any("instance set" in v for v in validate(missing, dag, table))


def test_validate_catches_same_core_overlap():
    dag = immediate_fusion_toy()
    table, out, sched, _ = solve_pipeline(dag)
    by = sched.by_key()
    a, b = by[("s1", 1)], by[("s2", 1)]
    entries = [
        replace(e, core=a.core, start=a.start, finish=a.start + dag.task("s2").wcet)
        if (e.task, e.index) == ("s2", 1)
        else e
        for e in sched.entries
    ]
    clashing = replace(sched, entries=entries)
    assert validate(clashing, dag, table)


def test_metrics_match_solver_levels():
    for dag in (chain_toy(), wait_fusion_toy(), immediate_fusion_toy()):
        _, out, _, report = solve_pipeline(dag)
        assert report.level_values == pytest.approx(out.objective_levels, abs=1e-6)


def test_replay_base_window_equals_eval():
    dag = wait_fusion_toy()
    table, _, sched, report = solve_pipeline(dag)
    rep1, lines = replay(sched, dag, 1, table)
    assert rep1.per_sink == report.per_sink
    assert rep1.wcrt == report.wcrt
    assert lines == trace_lines(sched, dag)


def test_replay_metrics_stable_across_horizons():
    for dag in (chain_toy(), wait_fusion_toy(), immediate_fusion_toy()):
        table, _, sched, _ = solve_pipeline(dag)
        reports = [replay(sched, dag, n, table)[0] for n in (2, 3, 5)]
        assert all(r.per_sink == reports[0].per_sink for r in reports[1:])
        assert all(r.wcrt == reports[0].wcrt for r in reports[1:])


def test_replay_extends_entry_set():
    dag = chain_toy()
    table, _, sched, _ = solve_pipeline(dag)
    rep, lines = replay(sched, dag, 3, table)
    # two extra hyperperiods of both tasks
    assert len(lines) == 3 * (len(sched.entries) + 2 * 2)
    with pytest.raises(ValueError):
        replay(sched, dag, 0, table)


def test_trace_lines_format_and_order():
    dag = wait_fusion_toy()
    table, _, sched, _ = solve_pipeline(dag)
    lines = trace_lines(sched, dag)
    assert len(lines) == 3 * len(sched.entries)
    times = []
    for line in lines:
        time, task, index, core, event = line.split()
        assert event in ("trigger", "start", "finish")
        assert (task, int(index)) in sched.by_key()
        assert 0 <= int(core) < dag.cores
        times.append(int(time))
    assert times == sorted(times)


def test_freshness_warnings_smoke():
    dag = wait_fusion_toy()
    table, _, sched, _ = solve_pipeline(dag)
    assert isinstance(freshness_warnings(sched, dag, table), list)
