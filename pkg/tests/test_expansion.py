"""Instance counting, phase windows, and usable-input index ranges."""
from __future__ import annotations

import math

import pytest
from helpers import IFUS, SEN, SUB, TFUS, WFUS, make_dag, wait_fusion_toy

from fusionsched.expansion import (
    ExpansionError,
    build_instance_table,
    hyperperiod,
    n_ins,
    time_windows,
    used_index_bounds,
)
from fusionsched.gen import GenConfig, generate
from fusionsched.graph import DagSpec, TaskSpec, TaskType
from fusionsched.presets import count_demo
from hypothesis import given, settings
from hypothesis import strategies as st


def test_hyperperiod_is_lcm_of_timer_periods():
    dag = make_dag(
        "hp", 1,
        [("s1", SEN, 1, 10, ()), ("s2", SEN, 1, 15, ()), ("tf", TFUS, 1, 20, ("s1", "s2"))],
    )
    assert hyperperiod(dag) == math.lcm(10, 15, 20)


def test_hyperperiod_needs_a_timer():
    dag = DagSpec("x", 1, (TaskSpec("a", TaskType.SUBSCRIPTION, 1, preds=()),))
    with pytest.raises(ExpansionError):
        hyperperiod(dag)


def test_counting_rules_on_mixed_graph():
    dag = count_demo()
    counts = n_ins(dag, 60)
    expected = dict(
        t1=6, t2=3, t3=4, t4=2, t5=6, t6=3, t7=3, t8=5, t9=3, t10=3, t11=3
    )
    assert counts == expected


def test_counting_rules_match_type_formulas():
    dag = count_demo()
    for delta in (30, 60, 90, 120):
        counts = n_ins(dag, delta)
        for t in dag.tasks:
            if t.kind.is_timer:
                assert counts[t.name] == math.ceil(delta / t.period)
            elif t.kind is SUB:
                assert counts[t.name] == counts[t.preds[0]]
            elif t.kind is WFUS:
                assert counts[t.name] == min(counts[p] for p in t.preds)
            else:
                assert counts[t.name] == sum(counts[p] for p in t.preds) - (len(t.preds) - 1)


def test_table_structure():
    dag = wait_fusion_toy()
    table = build_instance_table(dag, 2)
    assert (table.hp, table.k, table.delta) == (6, 2, 12)
    assert table.counts == {"s1": 4, "s2": 2, "wf": 2}
    for name, wc in table.window_counts.items():
        assert wc[0] == 0 and list(wc) == sorted(wc)  # cumulative counts
        assert table.steady[name] == wc[2] - wc[1]
        assert table.counts[name] == wc[table.k]
    assert table.count("s1") == 4
    assert [i.index for i in table.instances_of("s1")] == [1, 2, 3, 4]
    assert table.phase_of("s1", 2) == 1 and table.phase_of("s1", 3) == 2
    assert all(i.phase == table.phase_of(i.task, i.index) for i in table.instances)
    assert table.release_of("s1", 3) == 6
    with pytest.raises(KeyError):
        table.release_of("wf", 1)  # event-triggered
    assert table.mirror("s1", 1) == 3
    assert list(table.eval_indices("wf")) == [2]


def test_table_rejects_short_horizon():
    with pytest.raises(ExpansionError, match="at least 2"):
        build_instance_table(wait_fusion_toy(), 1)


def test_used_index_bounds_per_type():
    dag = make_dag(
        "bounds", 2,
        [
            ("s1", SEN, 1, 3, ()),
            ("s2", SEN, 1, 6, ()),
            ("wf", WFUS, 1, None, ("s1", "s2")),
            ("fi", IFUS, 1, None, ("s1", "s2")),
            ("tf", TFUS, 1, 6, ("s1", "s2")),
        ],
    )
    table = build_instance_table(dag, 2)
    n1, nw = table.counts["s1"], table.counts["wf"]
    # wait-for-all consumes one fresh round per instance
    for j in range(1, nw + 1):
        assert used_index_bounds(table, "wf", "s1", j) == (j, n1 - (nw - j))
        assert used_index_bounds(table, "wf", "s2", j) == (j, table.counts["s2"] - (nw - j))
    # timer fusion samples whatever is newest
    assert used_index_bounds(table, "tf", "s1", 2) == (1, n1)
    # immediate fusion: at least one input advances per instance
    ni = table.counts["fi"]
    assert ni == n1 + table.counts["s2"] - 1
    lo_first, hi_first = used_index_bounds(table, "fi", "s1", 1)
    assert (lo_first, hi_first) == (1, n1)
    lo_last, _ = used_index_bounds(table, "fi", "s1", ni)
    assert lo_last == len(dag.task("fi").preds) + (ni - 1) - table.counts["s2"]
    with pytest.raises(ValueError):
        used_index_bounds(table, "s1", "s1", 1)


def test_time_windows_are_consistent():
    dag = wait_fusion_toy()
    table = build_instance_table(dag, 2)
    est, lft = time_windows(table)
    for t in dag.tasks:
        for j in range(1, table.counts[t.name] + 1):
            assert est[(t.name, j)] + t.wcet <= lft[(t.name, j)]
            if t.kind.is_timer:
                assert est[(t.name, j)] >= table.release_of(t.name, j)
            if j > 1:
                # room for the previous instance in the serial chain
                assert lft[(t.name, j - 1)] <= lft[(t.name, j)] - t.wcet
                assert est[(t.name, j - 1)] <= est[(t.name, j)]


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=400))
def test_generated_tables_satisfy_count_invariants(seed):
    dag = generate(GenConfig(node_count=5, seed=seed))
    table = build_instance_table(dag, 3)
    for t in dag.tasks:
        wc = table.window_counts[t.name]
        incs = {wc[p + 1] - wc[p] for p in range(1, table.k)}
        assert len(incs) == 1  # steady growth past warm-up
        assert table.steady[t.name] > 0
        if t.kind.is_timer:
            assert table.counts[t.name] == math.ceil(table.delta / t.period)
    counts = n_ins(dag, table.delta)
    assert counts == table.counts
