"""Document formats: task graphs and schedules as YAML, metrics as CSV."""
from __future__ import annotations

import csv
from pathlib import Path

import yaml

from .expansion import InstanceTable
from .graph import (
    DagSpec,
    MetricConfig,
    ObjectiveTerm,
    TaskSpec,
    TaskType,
)
from .schedule import MetricsReport, Schedule, ScheduledInstance

_TYPE_ALIASES = {
    "sen": "sensor",
    "sub": "subscription",
    **{t.value: t.value for t in TaskType},
}


class SpecError(ValueError):
    """Malformed or invalid input document."""


def _task_type(tag: str) -> TaskType:
    try:
        return TaskType(_TYPE_ALIASES[str(tag)])
    except KeyError:
        raise SpecError(f"unknown task type {tag!r}") from None


def dag_to_dict(dag: DagSpec) -> dict:
    tasks = []
    for t in dag.tasks:
        row: dict = {"name": t.name, "type": t.kind.value, "wcet": t.wcet}
        row["period"] = t.period if t.kind.is_timer else 0
        if t.deadline is not None:
            row["deadline"] = t.deadline
        if t.preds:
            row["preds"] = list(t.preds)
        tasks.append(row)
    out = {"name": dag.name, "cores": dag.cores, "tasks": tasks}
    if dag.metrics != MetricConfig():
        mc = dag.metrics
        m: dict = {
            "objective": [
                {"metric": o.metric, "weight": o.weight, "priority": o.priority}
                for o in mc.objective
            ]
        }
        if mc.sinks is not None:
            m["sinks"] = list(mc.sinks)
        if mc.wcrt_pairs is not None:
            m["wcrt_pairs"] = [list(p) for p in mc.wcrt_pairs]
        out["metrics"] = m
    return out


def dag_from_dict(doc: dict) -> DagSpec:
    if not isinstance(doc, dict) or not isinstance(doc.get("tasks"), list):
        raise SpecError("document must be a mapping with a 'tasks' list")
    tasks = []
    for row in doc["tasks"]:
        try:
            kind = _task_type(row["type"])
            period = row.get("period", 0) or None  # 0 marks event-triggered
            tasks.append(
                TaskSpec(
                    name=str(row["name"]),
                    kind=kind,
                    wcet=int(row["wcet"]),
                    period=int(period) if period is not None else None,
                    deadline=int(row["deadline"]) if row.get("deadline") is not None else None,
                    preds=tuple(str(p) for p in row.get("preds", ())),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, SpecError):
                raise
            raise SpecError(f"bad task entry {row!r}: {e}") from None
    metrics = MetricConfig()
    if "metrics" in doc:
        m = doc["metrics"]
        objective = tuple(
            ObjectiveTerm(
                metric=str(o["metric"]),
                weight=int(o.get("weight", 1)),
                priority=int(o.get("priority", 1)),
            )
            for o in m.get("objective", [])
        ) or MetricConfig().objective
        metrics = MetricConfig(
            objective=objective,
            sinks=tuple(m["sinks"]) if m.get("sinks") is not None else None,
            wcrt_pairs=tuple((str(a), str(b)) for a, b in m["wcrt_pairs"])
            if m.get("wcrt_pairs") is not None
            else None,
        )
    return DagSpec(
        name=str(doc.get("name", "unnamed")),
        cores=int(doc.get("cores", 1)),
        tasks=tuple(tasks),
        metrics=metrics,
    )


def dump_dag(dag: DagSpec) -> str:
    return yaml.safe_dump(dag_to_dict(dag), sort_keys=False)


def parse_dag(text: str) -> DagSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SpecError(f"not parseable: {e}") from None
    return dag_from_dict(doc)


def load_dag(path: str | Path) -> DagSpec:
    return parse_dag(Path(path).read_text())


def save_dag(dag: DagSpec, path: str | Path) -> None:
    Path(path).write_text(dump_dag(dag))


# -- schedules -------------------------------------------------------------------


def schedule_to_dict(s: Schedule) -> dict:
    return {
        "case": s.case,
        "hp": s.hp,
        "k": s.k,
        "delta": s.delta,
        "cores": s.cores,
        "entries": [
            {
                "task": e.task,
                "index": e.index,
                "phase": e.phase,
                "core": e.core,
                "start": e.start,
                "finish": e.finish,
                **({"uses": dict(e.uses)} if e.uses else {}),
            }
            for e in s.entries
        ],
    }


def schedule_from_dict(doc: dict) -> Schedule:
    entries = [
        ScheduledInstance(
            task=str(r["task"]),
            index=int(r["index"]),
            phase=int(r["phase"]),
            core=int(r["core"]),
            start=int(r["start"]),
            finish=int(r["finish"]),
            uses={str(p): int(j) for p, j in r.get("uses", {}).items()},
        )
        for r in doc["entries"]
    ]
    return Schedule(
        case=str(doc["case"]),
        hp=int(doc["hp"]),
        k=int(doc["k"]),
        delta=int(doc["delta"]),
        cores=int(doc["cores"]),
        entries=entries,
    )


def save_schedule(s: Schedule, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(schedule_to_dict(s), sort_keys=False))


def load_schedule(path: str | Path) -> Schedule:
    return schedule_from_dict(yaml.safe_load(Path(path).read_text()))


# -- tables and reports ------------------------------------------------------------


def table_text(table: InstanceTable) -> str:
    """Human-readable instance-count table, one task per line."""
    lines = [
        f"hyperperiod {table.hp}  windows {table.k}  horizon {table.delta}",
        f"{'task':<12} {'count':>5} {'steady':>6}  per-window",
    ]
    for t in table.dag.tasks:
        wc = table.window_counts[t.name]
        lines.append(
            f"{t.name:<12} {table.counts[t.name]:>5} {table.steady[t.name]:>6}  "
            + " ".join(str(c) for c in wc[1:])
        )
    return "\n".join(lines) + "\n"


METRICS_CSV_COLUMNS = ("case", "metric", "sink", "sensor", "value")


def metrics_rows(case: str, report: MetricsReport) -> list[tuple]:
    """Long-format rows, one metric value per line."""
    rows = []
    for sink in sorted(report.per_sink):
        for metric in ("mrt", "mtd", "paoi", "ms"):
            rows.append((case, metric, sink, "", report.per_sink[sink][metric]))
    for (sensor, sink) in sorted(report.wcrt):
        rows.append((case, "wcrt", sink, sensor, report.wcrt[(sensor, sink)]))
    return rows


def write_metrics_csv(path: str | Path, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_CSV_COLUMNS)
        w.writerows(rows)
