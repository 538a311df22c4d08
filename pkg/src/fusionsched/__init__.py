"""Optimal static schedules and timing metrics for sensor-fusion task graphs."""

from .expansion import (
    ExpansionError,
    InstanceTable,
    build_instance_table,
    time_windows,
    used_index_bounds,
)
from .gantt import render_gantt, save_gantt
from .gen import GenConfig, GenError, generate
from .graph import (
    METRIC_NAMES,
    DagSpec,
    MetricConfig,
    ObjectiveTerm,
    ProducerMap,
    TaskSpec,
    TaskType,
    adjust_branch_successors,
    compute_producers,
    normalize,
    require_valid,
    validate,
)
from .io import (
    SpecError,
    dump_dag,
    load_dag,
    load_schedule,
    metrics_rows,
    parse_dag,
    save_dag,
    save_schedule,
    table_text,
    write_metrics_csv,
)
from .model import IlpModel, build_ilp, metric_targets, sensor_ancestors
from .oracle import BudgetError, CapError, brute_force_solve
from .presets import PresetError, get_preset, preset_names, preset_usage
from .schedule import (
    MetricsReport,
    Schedule,
    ScheduledInstance,
    eval_metrics,
    extract_schedule,
    freshness_warnings,
    replay,
    trace_lines,
)
from .schedule import validate as validate_schedule
from .solve import ERROR, FEASIBLE_TIMEOUT, INFEASIBLE, OPTIMAL, SolveOutcome, solve

__version__ = "0.1.0"

__all__ = [
    "ERROR",
    "FEASIBLE_TIMEOUT",
    "INFEASIBLE",
    "METRIC_NAMES",
    "OPTIMAL",
    "BudgetError",
    "CapError",
    "DagSpec",
    "ExpansionError",
    "GenConfig",
    "GenError",
    "IlpModel",
    "InstanceTable",
    "MetricConfig",
    "MetricsReport",
    "ObjectiveTerm",
    "PresetError",
    "ProducerMap",
    "Schedule",
    "ScheduledInstance",
    "SolveOutcome",
    "SpecError",
    "TaskSpec",
    "TaskType",
    "adjust_branch_successors",
    "brute_force_solve",
    "build_ilp",
    "build_instance_table",
    "compute_producers",
    "dump_dag",
    "eval_metrics",
    "extract_schedule",
    "freshness_warnings",
    "generate",
    "get_preset",
    "load_dag",
    "load_schedule",
    "metric_targets",
    "metrics_rows",
    "normalize",
    "parse_dag",
    "preset_names",
    "preset_usage",
    "render_gantt",
    "replay",
    "require_valid",
    "save_dag",
    "save_gantt",
    "save_schedule",
    "sensor_ancestors",
    "solve",
    "table_text",
    "time_windows",
    "trace_lines",
    "used_index_bounds",
    "validate",
    "validate_schedule",
    "write_metrics_csv",
]
