"""Graph validation, derived structure, and branch retyping."""
from __future__ import annotations

import pytest
from helpers import IFUS, SEN, SUB, TFUS, WFUS, make_dag

from fusionsched.gen import GenConfig, generate
from fusionsched.graph import (
    DagSpec,
    MetricConfig,
    ObjectiveTerm,
    TaskSpec,
    TaskType,
    adjust_branch_successors,
    compute_producers,
    normalize,
    require_valid,
    validate,
)
from hypothesis import given, settings
from hypothesis import strategies as st


def raw(name, cores, tasks, metrics=None):
    return DagSpec(
        name=name, cores=cores, tasks=tuple(tasks),
        metrics=metrics if metrics is not None else MetricConfig(),
    )


def test_task_type_flags():
    assert TaskType.SENSOR.is_timer and TaskType.T_FUSION.is_timer
    assert not TaskType.SUBSCRIPTION.is_timer and not TaskType.W_FUSION.is_timer
    assert {k for k in TaskType if k.is_fusion} == {TFUS, WFUS, IFUS}


def test_valid_chain_has_no_violations():
    dag = raw("ok", 1, [TaskSpec("s", SEN, 1, period=4), TaskSpec("a", SUB, 1, preds=("s",))])
    assert validate(dag) == []


@pytest.mark.parametrize(
    "tasks, needle",
    [
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("s", SEN, 1, period=4)], "duplicate task id"),
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("a", SUB, 1, preds=("nope",))], "unknown predecessor"),
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("a", WFUS, 1, preds=("a", "s"))], "self-loop"),
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("a", WFUS, 1, preds=("s", "s"))], "duplicate predecessor"),
        ([TaskSpec("s", SEN, 1, period=4, preds=("s",))], "sensor cannot have predecessors"),
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("a", SUB, 1)], "exactly one predecessor"),
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("a", WFUS, 1)], "at least one predecessor"),
        ([TaskSpec("s", SEN, 1)], "positive period"),
        ([TaskSpec("s", SEN, 1, period=0)], "positive period"),
        ([TaskSpec("s", SEN, 1, period=4), TaskSpec("a", SUB, 1, period=4, preds=("s",))], "period set on event-triggered"),
        ([TaskSpec("s", SEN, 1, period=4, deadline=0)], "non-positive deadline"),
        ([TaskSpec("s", SEN, 5, period=4)], "deadline shorter than wcet"),
        ([TaskSpec("s", SEN, 0, period=4)], "positive integer"),
        ([TaskSpec("a", SUB, 1, preds=("b",)), TaskSpec("b", SUB, 1, preds=("a",))], "at least one sensor"),
    ],
)
def test_validate_flags_structural_problems(tasks, needle):
    errs = validate(raw("bad", 1, tasks))
    assert any(needle in e for e in errs), errs


def test_validate_flags_cycle_and_core_count():
    cyc = raw(
        "cyc", 0,
        [
            TaskSpec("s", SEN, 1, period=4),
            TaskSpec("a", WFUS, 1, preds=("s", "b")),
            TaskSpec("b", SUB, 1, preds=("a",)),
        ],
    )
    errs = validate(cyc)
    assert any("cycle" in e for e in errs)
    assert any("core count" in e for e in errs)


def test_validate_flags_metric_config_problems():
    base = [TaskSpec("s", SEN, 1, period=4), TaskSpec("a", SUB, 1, preds=("s",))]
    bad_metric = MetricConfig(objective=(ObjectiveTerm("latency"),))
    assert any("unknown metric" in e for e in validate(raw("m", 1, base, bad_metric)))
    zero = MetricConfig(objective=(ObjectiveTerm("mrt", 0),))
    assert any("no positive weight" in e for e in validate(raw("m", 1, base, zero)))
    neg = MetricConfig(objective=(ObjectiveTerm("mrt", -1),))
    assert any("negative weight" in e for e in validate(raw("m", 1, base, neg)))
    bad_sink = MetricConfig(sinks=("ghost",))
    assert any("not a task" in e for e in validate(raw("m", 1, base, bad_sink)))
    bad_pair = MetricConfig(wcrt_pairs=(("a", "s"),))
    assert any("not a sensor" in e for e in validate(raw("m", 1, base, bad_pair)))
    ghost_pair = MetricConfig(wcrt_pairs=(("x", "y"),))
    assert any("unknown task" in e for e in validate(raw("m", 1, base, ghost_pair)))


def test_deadline_defaults():
    dag = raw(
        "d", 1,
        [
            TaskSpec("s1", SEN, 1, period=4),
            TaskSpec("s2", SEN, 1, period=6, deadline=5),
            TaskSpec("a", SUB, 1, preds=("s1",)),
            TaskSpec("tf", TFUS, 1, period=2, preds=("a",)),
        ],
    )
    assert dag.deadline_of("s1") == 4  # timer default: its own period
    assert dag.deadline_of("s2") == 5  # explicit wins
    assert dag.deadline_of("a") == 6  # event default: largest timer period
    assert dag.deadline_of("tf") == 2


def test_normalize_fills_every_deadline():
    dag = normalize(raw("n", 1, [TaskSpec("s", SEN, 1, period=4), TaskSpec("a", SUB, 1, preds=("s",))]))
    assert all(t.deadline is not None for t in dag.tasks)
    assert dag.task("a").deadline == 4


def test_require_valid_raises_with_reasons():
    with pytest.raises(ValueError, match="positive period"):
        require_valid(raw("bad", 1, [TaskSpec("s", SEN, 1)]))


def test_topo_order_respects_edges():
    dag = make_dag(
        "topo", 1,
        [
            ("s", SEN, 1, 4, ()),
            ("a", SUB, 1, None, ("s",)),
            ("b", SUB, 1, None, ("a",)),
        ],
    )
    order = dag.topo_order()
    assert order.index("s") < order.index("a") < order.index("b")
    assert dag.sinks() == ("b",)
    assert dag.sensors() == ("s",)
    assert dag.succs("s") == ("a",)


def test_producers_resolve_through_subscriptions():
    dag = make_dag(
        "prod", 1,
        [
            ("s1", SEN, 1, 4, ()),
            ("s2", SEN, 1, 4, ()),
            ("a", SUB, 1, None, ("s1",)),
            ("b", SUB, 1, None, ("a",)),
            ("wf", WFUS, 1, None, ("b", "s2")),
            ("c", SUB, 1, None, ("wf",)),
        ],
    )
    pm = compute_producers(dag)
    assert pm.producer_of["b"] == "s1"  # subscriptions inherit the nearest source
    assert pm.producer_of["c"] == "wf"  # fusions publish their own result
    assert pm.pred_producers["wf"] == ("s1", "s2")


def test_branch_adjustment_retypes_fanout_subscriptions():
    dag = raw(
        "fan", 1,
        [
            TaskSpec("s", SEN, 1, period=4),
            TaskSpec("a", SUB, 1, preds=("s",)),
            TaskSpec("b", SUB, 1, preds=("s",)),
            TaskSpec("c", SUB, 1, preds=("a",)),
        ],
    )
    adj = adjust_branch_successors(dag)
    assert adj.task("a").kind is IFUS  # branch successors buffer their own copy
    assert adj.task("b").kind is IFUS
    assert adj.task("c").kind is SUB  # single-successor edge stays a subscription
    assert adjust_branch_successors(adj) == adj  # idempotent


def test_branch_adjustment_keeps_fusion_successors():
    dag = raw(
        "fanf", 1,
        [
            TaskSpec("s", SEN, 1, period=4),
            TaskSpec("a", SUB, 1, preds=("s",)),
            TaskSpec("wf", WFUS, 1, preds=("s", "a")),
        ],
    )
    adj = adjust_branch_successors(dag)
    assert adj.task("a").kind is IFUS
    assert adj.task("wf").kind is WFUS


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=400))
def test_generated_graphs_validate_clean(seed):
    dag = generate(GenConfig(node_count=5, seed=seed))
    assert validate(dag) == []
    order = dag.topo_order()
    pos = {n: i for i, n in enumerate(order)}
    for t in dag.tasks:
        for p in t.preds:
            assert pos[p] < pos[t.name]
