"""Exhaustive-search reference: hand-checked optima and solver agreement."""
from __future__ import annotations

import pytest
from helpers import (
    chain_toy,
    immediate_fusion_toy,
    overload_toy,
    solve_pipeline,
    timer_fusion_toy,
    tiny_random_dags,
    wait_fusion_toy,
)

from fusionsched.expansion import build_instance_table
from fusionsched.oracle import BudgetError, CapError, brute_force_solve
from fusionsched.schedule import eval_metrics
from fusionsched.schedule import validate as check_schedule


def both_routes(dag, k=2):
    table = build_instance_table(dag, k)
    _, ilp_out, _, _ = solve_pipeline(dag, k)
    brute_out = brute_force_solve(dag, table, time_budget=120.0)
    return table, ilp_out, brute_out


@pytest.mark.parametrize(
    "builder, blend",
    [
        (chain_toy, 16.0),  # start-gap slack traded against reaction time
        (timer_fusion_toy, 18.0),  # two symmetric optima share the blend
        (wait_fusion_toy, 24.0),  # fresh-round wait dominates the layout
    ],
)
def test_hand_checked_optima(builder, blend):
    dag = builder()
    table, ilp_out, brute_out = both_routes(dag)
    assert ilp_out.status == "optimal"
    assert brute_out.status == "optimal"
    assert ilp_out.objective_levels[0] == pytest.approx(blend, abs=1e-6)
    assert brute_out.objective_levels[0] == pytest.approx(blend, abs=1e-6)
    assert check_schedule(brute_out.schedule, dag, table) == []
    replayed = eval_metrics(brute_out.schedule, dag, table)
    assert replayed.level_values == pytest.approx(brute_out.objective_levels, abs=1e-6)


def test_two_core_fusion_agreement():
    dag = immediate_fusion_toy()
    table, ilp_out, brute_out = both_routes(dag)
    assert ilp_out.status == brute_out.status == "optimal"
    assert ilp_out.objective_levels[0] == pytest.approx(
        brute_out.objective_levels[0], abs=1e-6
    )
    assert check_schedule(brute_out.schedule, dag, table) == []


def test_infeasibility_agreement():
    _, ilp_out, brute_out = both_routes(overload_toy())
    assert ilp_out.status == "infeasible"
    assert brute_out.status == "infeasible"


def test_instance_cap():
    dag = chain_toy()
    table = build_instance_table(dag, 2)
    with pytest.raises(CapError, match="instances"):
        brute_force_solve(dag, table, max_instances=3)
    with pytest.raises(CapError, match="window"):
        brute_force_solve(dag, table, max_delta=4)


def test_grid_must_be_positive():
    dag = chain_toy()
    table = build_instance_table(dag, 2)
    with pytest.raises(ValueError, match="grid"):
        brute_force_solve(dag, table, grid=0)


def test_time_budget_is_enforced():
    dag = immediate_fusion_toy()
    table = build_instance_table(dag, 2)
    with pytest.raises(BudgetError):
        brute_force_solve(dag, table, time_budget=1e-9)


def test_grid_resolution_changes_nothing():
    dag = wait_fusion_toy()
    table = build_instance_table(dag, 2)
    one = brute_force_solve(dag, table, grid=1, time_budget=120.0)
    five = brute_force_solve(dag, table, grid=5, time_budget=120.0)
    assert one.objective_levels == five.objective_levels


def test_search_and_solver_agree_on_small_graphs():
    for dag in tiny_random_dags(40):
        table = build_instance_table(dag, 2)
        _, ilp_out, _, _ = solve_pipeline(dag, 2, time_limit=60.0)
        brute_out = brute_force_solve(dag, table, time_budget=300.0)
        assert ilp_out.status in ("optimal", "infeasible"), dag.name
        assert brute_out.status == ilp_out.status, dag.name
        if ilp_out.status == "optimal":
            assert ilp_out.objective_levels[0] == pytest.approx(
                brute_out.objective_levels[0], abs=1e-6
            ), dag.name
            assert check_schedule(brute_out.schedule, dag, table) == [], dag.name
