"""Solver driving: statuses, lexicographic levels, re-checking, backends."""
from __future__ import annotations

import numpy as np
import pytest
from helpers import chain_toy, make_dag, overload_toy, solve_pipeline, SEN, SUB

from fusionsched import backends
from fusionsched.graph import MetricConfig, ObjectiveTerm
from fusionsched.model import build_ilp
from fusionsched.solve import ERROR, INFEASIBLE, OPTIMAL, solve

from dataclasses import replace


def test_optimal_solve_passes_recheck():
    table, out, sched, report = solve_pipeline(chain_toy())
    assert out.status == OPTIMAL
    assert out.backend == "scipy-highs"
    assert out.violations == []
    assert out.objective_levels and out.objective == out.objective_levels[0]
    assert sched is not None and report is not None


def test_infeasible_overload():
    _, out, sched, _ = solve_pipeline(overload_toy())
    assert out.status == INFEASIBLE
    assert sched is None
    assert out.objective is None


def test_structural_infeasibility_reported_without_backend_run():
    squeezed = make_dag(
        "squeeze", 1,
        [("s", SEN, 7, 8, ()), ("tf", SUB, 1, None, ("s",))],
    )
    ilp = build_ilp(squeezed, 2)
    ilp.mark_infeasible("forced for the test")
    out = solve(ilp)
    assert out.status == INFEASIBLE
    assert "forced for the test" in out.message


def test_zero_time_limit_reports_error():
    ilp = build_ilp(chain_toy(), 2)
    out = solve(ilp, time_limit=0.0)
    assert out.status == ERROR
    assert out.x is None


def test_lexicographic_levels_fix_earlier_objectives():
    base = chain_toy()
    primary_only = replace(
        base, metrics=MetricConfig(objective=(ObjectiveTerm("mrt"),))
    )
    layered = replace(
        base,
        metrics=MetricConfig(
            objective=(ObjectiveTerm("mrt"), ObjectiveTerm("paoi", 1, 2))
        ),
    )
    _, out1, _, _ = solve_pipeline(primary_only)
    _, out2, _, rep2 = solve_pipeline(layered)
    assert len(out1.objective_levels) == 1
    assert len(out2.objective_levels) == 2
    # the secondary level must not degrade the primary optimum
    assert out2.objective_levels[0] == out1.objective_levels[0]
    assert rep2.level_values == out2.objective_levels


def test_deterministic_resolve_is_bitwise_stable():
    ilp1 = build_ilp(chain_toy(), 2)
    ilp2 = build_ilp(chain_toy(), 2)
    out1 = solve(ilp1, deterministic=True)
    out2 = solve(ilp2, deterministic=True)
    assert out1.objective_levels == out2.objective_levels
    assert np.array_equal(out1.x, out2.x)


def test_backend_selection():
    assert backends.pick_backend(None) == "scipy-highs"
    assert backends.pick_backend("scipy") == "scipy"
    with pytest.raises(ValueError, match="unknown backend"):
        backends.pick_backend("cplex")


def test_backend_env_override(monkeypatch):
    monkeypatch.setenv(backends.BACKEND_ENV, "scipy")
    assert backends.pick_backend(None) == "scipy"
    monkeypatch.setenv(backends.BACKEND_ENV, "nope")
    with pytest.raises(ValueError, match="unknown backend"):
        backends.pick_backend(None)
