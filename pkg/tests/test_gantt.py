"""Timeline rendering: determinism and element inventory."""
from __future__ import annotations

from helpers import immediate_fusion_toy, solve_pipeline, wait_fusion_toy

from fusionsched.gantt import render_gantt, save_gantt
from fusionsched.schedule import Schedule


def test_render_is_deterministic():
    dag = wait_fusion_toy()
    _, _, sched, _ = solve_pipeline(dag)
    assert render_gantt(sched, dag) == render_gantt(sched, dag)


def test_every_instance_gets_a_bar():
    dag = wait_fusion_toy()
    _, _, sched, _ = solve_pipeline(dag)
    svg = render_gantt(sched, dag)
    assert svg.lstrip().startswith("<?xml")
    for e in sched.entries:
        assert f'id="bar-{e.task}.{e.index}"' in svg
    fusion_instances = [e for e in sched.entries if e.uses]
    assert fusion_instances
    for e in fusion_instances:
        assert f'id="trigger-{e.task}.{e.index}"' in svg


def test_one_lane_per_core():
    dag = immediate_fusion_toy()
    _, _, sched, _ = solve_pipeline(dag)
    svg = render_gantt(sched, dag)
    assert "core 0" in svg and "core 1" in svg


def test_empty_schedule_renders_empty_lanes():
    empty = Schedule(case="empty", hp=10, k=2, delta=20, cores=2, entries=[])
    dag = wait_fusion_toy()
    svg = render_gantt(empty, dag)
    assert 'id="bar-' not in svg
    assert "core 1" in svg


def test_save_writes_identical_bytes(tmp_path):
    dag = wait_fusion_toy()
    _, _, sched, _ = solve_pipeline(dag)
    p1 = save_gantt(sched, dag, tmp_path / "a.svg")
    p2 = save_gantt(sched, dag, tmp_path / "b.svg")
    assert p1.read_bytes() == p2.read_bytes()
