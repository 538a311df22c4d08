"""Shared graph builders and a build-solve-check pipeline for tests."""
from __future__ import annotations

import random

from fusionsched.expansion import build_instance_table
from fusionsched.gen import GenConfig, GenError, generate
from fusionsched.graph import (
    DagSpec,
    MetricConfig,
    ObjectiveTerm,
    TaskSpec,
    TaskType,
    adjust_branch_successors,
    require_valid,
)
from fusionsched.model import build_ilp
from fusionsched.schedule import eval_metrics, extract_schedule
from fusionsched.schedule import validate as check_schedule
from fusionsched.solve import solve

SEN = TaskType.SENSOR
SUB = TaskType.SUBSCRIPTION
TFUS = TaskType.T_FUSION
WFUS = TaskType.W_FUSION
IFUS = TaskType.I_FUSION


def make_dag(name, cores, rows, metrics=None):
    """rows: (name, kind, wcet, period, preds) tuples."""
    tasks = tuple(
        TaskSpec(n, kind, wcet, period=period, preds=tuple(preds))
        for n, kind, wcet, period, preds in rows
    )
    dag = DagSpec(
        name=name,
        cores=cores,
        tasks=tasks,
        metrics=metrics if metrics is not None else MetricConfig(),
    )
    return require_valid(adjust_branch_successors(dag))


def objective(*metrics: str) -> MetricConfig:
    return MetricConfig(objective=tuple(ObjectiveTerm(m) for m in metrics))


def chain_toy() -> DagSpec:
    """One sensor feeding one subscription, single core."""
    return make_dag(
        "chain-toy",
        1,
        [("s", SEN, 1, 4, ()), ("a", SUB, 1, None, ("s",))],
    )


def timer_fusion_toy() -> DagSpec:
    """A sensor sampled by a same-period timer fusion, single core."""
    return make_dag(
        "tfus-toy",
        1,
        [("s", SEN, 1, 5, ()), ("tf", TFUS, 1, 5, ("s",))],
    )


def wait_fusion_toy() -> DagSpec:
    """Fast and slow sensors joined by a wait-for-all fusion, single core."""
    return make_dag(
        "wfus-toy",
        1,
        [
            ("s1", SEN, 1, 3, ()),
            ("s2", SEN, 1, 6, ()),
            ("wf", WFUS, 1, None, ("s1", "s2")),
        ],
    )


def immediate_fusion_toy() -> DagSpec:
    """Two sensors joined by an immediate fusion, two cores."""
    return make_dag(
        "ifus-toy",
        2,
        [
            ("s1", SEN, 1, 4, ()),
            ("s2", SEN, 2, 4, ()),
            ("fi", IFUS, 1, None, ("s1", "s2")),
        ],
    )


def overload_toy() -> DagSpec:
    """Two sensors that together need more than one core can supply."""
    return make_dag(
        "overload-toy",
        1,
        [("s1", SEN, 2, 2, ()), ("s2", SEN, 1, 2, ())],
    )


def solve_pipeline(dag, k=2, *, pin_tasks=False, big_m_scale=1.0, **solve_kw):
    """Build, solve, extract, re-validate; returns (table, outcome, schedule, report)."""
    table = build_instance_table(dag, k)
    ilp = build_ilp(dag, k, table=table, pin_tasks=pin_tasks, big_m_scale=big_m_scale)
    out = solve(ilp, **solve_kw)
    if out.status not in ("optimal", "feasible-timeout"):
        return table, out, None, None
    sched = extract_schedule(out, table, dag)
    assert check_schedule(sched, dag, table) == []
    report = eval_metrics(sched, dag, table)
    return table, out, sched, report


def tiny_random_dag(seed: int) -> DagSpec | None:
    """Seeded draw of a graph small enough for exhaustive search (or None)."""
    rng = random.Random(seed * 977)
    n = rng.choice([2, 3, 3, 4, 4])
    s = 1 if n <= 2 else rng.choice([1, 1, 2])
    periods = rng.choice([(4,), (6,), (4, 8), (6, 12), (4, 6), (8,)])
    cores = rng.choice([1, 2])
    cfg = GenConfig(
        node_count=n,
        sensor_count=s,
        core_count=cores,
        seed=seed,
        event_wcet=(1, 2),
        utilization=(0.2, 0.5),
        periods=periods,
    )
    try:
        dag = generate(cfg)
    except GenError:
        return None
    table = build_instance_table(dag, 2)
    if sum(table.counts.values()) > 10:
        return None
    return dag


def tiny_random_dags(count: int, start_seed: int = 0) -> list[DagSpec]:
    out: list[DagSpec] = []
    seed = start_seed
    while len(out) < count:
        dag = tiny_random_dag(seed)
        seed += 1
        if dag is not None:
            out.append(dag)
    return out
