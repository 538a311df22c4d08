"""Command-line front end: solve cases, sweep campaigns, inspect, render."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
from pathlib import Path

import click

from . import io as fio
from .expansion import ExpansionError, build_instance_table
from .gantt import save_gantt
from .gen import GenConfig, GenError, generate
from .graph import (
    METRIC_NAMES,
    DagSpec,
    MetricConfig,
    ObjectiveTerm,
    TaskType,
    adjust_branch_successors,
    require_valid,
)
from .model import build_ilp
from .presets import PresetError, get_preset, preset_usage
from .schedule import eval_metrics, extract_schedule, trace_lines
from .schedule import validate as validate_schedule
from .solve import FEASIBLE_TIMEOUT, INFEASIBLE, OPTIMAL, solve

EXIT_OK = 0
EXIT_TIMEOUT = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4
EXIT_SOLVER = 5

_STATUS_EXIT = {
    OPTIMAL: EXIT_OK,
    FEASIBLE_TIMEOUT: EXIT_TIMEOUT,
    INFEASIBLE: EXIT_INFEASIBLE,
}

_INPUT_ERRORS = (fio.SpecError, PresetError, GenError, ExpansionError, ValueError)


def parse_metrics(text: str, base: MetricConfig) -> MetricConfig:
    """``mrt:2:1,mtd`` -> objective terms (metric[:weight[:priority]])."""
    terms = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        parts = tok.split(":")
        name = parts[0]
        if name not in METRIC_NAMES:
            raise fio.SpecError(f"unknown metric {name!r}; valid: {', '.join(METRIC_NAMES)}")
        weight = int(parts[1]) if len(parts) > 1 else 1
        priority = int(parts[2]) if len(parts) > 2 else 1
        terms.append(ObjectiveTerm(name, weight, priority))
    if not terms:
        raise fio.SpecError("--metrics given but no metric terms parsed")
    return replace(base, objective=tuple(terms))


def _load_dag(spec: str | None, preset: str | None) -> DagSpec:
    if bool(spec) == bool(preset):
        raise fio.SpecError("give exactly one of --spec or --preset")
    if preset:
        return get_preset(preset)
    return require_valid(adjust_branch_successors(fio.load_dag(spec)))


def _apply_flags(dag: DagSpec, cores: int | None, metrics: str | None) -> DagSpec:
    if cores:
        dag = replace(dag, cores=cores)
    if metrics:
        dag = replace(dag, metrics=parse_metrics(metrics, dag.metrics))
    return dag


def execute_case(
    dag: DagSpec,
    *,
    case: str,
    k: int = 3,
    time_limit: float | None = None,
    pin_tasks: bool = False,
    deterministic: bool = False,
    out_dir: Path | None = None,
) -> tuple[int, dict]:
    """Solve one graph and write its artifact set; returns (exit code, summary)."""
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        fio.save_dag(dag, out_dir / "spec.yaml")
    summary: dict = {"case": case}
    try:
        table = build_instance_table(dag, k)
        ilp = build_ilp(dag, k, table=table, pin_tasks=pin_tasks)
    except _INPUT_ERRORS as e:
        summary.update(status="input-error", message=str(e))
        _dump_summary(out_dir, summary)
        return EXIT_INPUT, summary
    if out_dir is not None:
        (out_dir / "table.txt").write_text(fio.table_text(table))
    log = str(out_dir / "solver.log") if out_dir is not None else None
    out = solve(ilp, time_limit=time_limit, log_path=log, deterministic=deterministic)
    summary.update(
        status=out.status,
        backend=out.backend,
        wall_time=round(out.wall_time, 3),
        objective=out.objective_levels,
        message=out.message,
    )
    if out.status in (OPTIMAL, FEASIBLE_TIMEOUT):
        schedule = extract_schedule(out, table, dag)
        problems = validate_schedule(schedule, dag, table)
        if problems:
            summary.update(status="error", violations=problems)
            _dump_summary(out_dir, summary)
            return EXIT_SOLVER, summary
        report = eval_metrics(schedule, dag, table)
        rows = fio.metrics_rows(case, report)
        summary["metrics"] = [[m, s, sen, v] for (_, m, s, sen, v) in rows]
        if out_dir is not None:
            fio.save_schedule(schedule, out_dir / "schedule.yaml")
            (out_dir / "trace.txt").write_text(
                "\n".join(trace_lines(schedule, dag)) + "\n"
            )
            fio.write_metrics_csv(out_dir / "metrics.csv", rows)
            save_gantt(schedule, dag, out_dir / "gantt.svg")
    _dump_summary(out_dir, summary)
    return _STATUS_EXIT.get(out.status, EXIT_SOLVER), summary


def _dump_summary(out_dir: Path | None, summary: dict) -> None:
    if out_dir is not None:
        (out_dir / "run.json").write_text(json.dumps(summary, indent=2) + "\n")


def _echo_summary(summary: dict) -> None:
    click.echo(f"status: {summary['status']}")
    if summary.get("message"):
        click.echo(f"note: {summary['message']}")
    if "objective" in summary and summary["objective"] is not None:
        click.echo(f"objective: {summary['objective']}")
    for metric, sink, sensor, value in summary.get("metrics", []):
        tag = f"{metric}[{sensor}->{sink}]" if sensor else f"{metric}[{sink}]"
        click.echo(f"{tag} = {value}")


@click.group()
def cli() -> None:
    """Static schedule optimization for fusion task graphs.

    Backend selection: set FUSIONSCHED_BACKEND (default: bundled MILP solver).
    """


@cli.command()
@click.option("--spec", type=click.Path(exists=True, dir_okay=False), help="Graph YAML.")
@click.option("--preset", help="Catalog graph, e.g. fusion-two-chains:TT.")
@click.option("--cores", type=int, default=None, help="Override core count.")
@click.option("--time-limit", type=float, default=None, help="Solver budget in seconds.")
@click.option("--metrics", default=None, help="Objective terms metric[:weight[:priority]],...")
@click.option("--delta-multiplier", type=int, default=3, show_default=True,
              help="Horizon length in hyperperiods.")
@click.option("--pin-tasks", is_flag=True, help="All instances of a task share one core.")
@click.option("--deterministic", is_flag=True, help="Bit-reproducible artifacts.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Artifact directory (schedule, trace, metrics, gantt).")
def run(spec, preset, cores, time_limit, metrics, delta_multiplier, pin_tasks,
        deterministic, out_dir) -> int:
    """Solve one graph and report its metrics."""
    try:
        dag = _apply_flags(_load_dag(spec, preset), cores, metrics)
    except _INPUT_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_INPUT
    code, summary = execute_case(
        dag,
        case=dag.name,
        k=delta_multiplier,
        time_limit=time_limit,
        pin_tasks=pin_tasks,
        deterministic=deterministic,
        out_dir=Path(out_dir) if out_dir else None,
    )
    _echo_summary(summary)
    return code


@cli.command()
@click.option("--spec", type=click.Path(exists=True, dir_okay=False))
@click.option("--preset")
@click.option("--delta-multiplier", type=int, default=3, show_default=True)
def inspect(spec, preset, delta_multiplier) -> int:
    """Validate a graph and print its instance-count table."""
    try:
        dag = _load_dag(spec, preset)
        table = build_instance_table(dag, delta_multiplier)
    except _INPUT_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_INPUT
    click.echo(f"graph: {dag.name}  tasks: {len(dag.tasks)}  cores: {dag.cores}")
    click.echo(fio.table_text(table), nl=False)
    return EXIT_OK


@cli.command()
@click.option("--spec", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gantt(spec, schedule_path, out) -> int:
    """Render a saved schedule to SVG."""
    try:
        dag = require_valid(adjust_branch_successors(fio.load_dag(spec)))
        sched = fio.load_schedule(schedule_path)
    except _INPUT_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_INPUT
    save_gantt(sched, dag, out)
    click.echo(f"wrote {out}")
    return EXIT_OK


@cli.command()
def presets() -> int:
    """List catalog graphs."""
    for name, usage in preset_usage().items():
        click.echo(f"{name:<20} {usage}")
    return EXIT_OK


_FUSION_FLAG = {
    "w-fus": TaskType.W_FUSION,
    "t-fus": TaskType.T_FUSION,
    "i-fus": TaskType.I_FUSION,
}


def _campaign_case(payload: dict) -> dict:
    """Worker: generate one graph and solve it in its own case directory."""
    cfg = GenConfig(
        node_count=payload["nodes"],
        sensor_count=payload["sensors"],
        edge_count=payload["edges"],
        fusion_types=tuple(_FUSION_FLAG[t] for t in payload["fusion_types"]),
        core_count=payload["cores"],
        seed=payload["seed"],
    )
    case_dir = Path(payload["out_dir"]) / payload["case"]
    try:
        dag = generate(cfg)
    except GenError as e:
        summary = {"case": payload["case"], "status": "input-error", "message": str(e)}
        case_dir.mkdir(parents=True, exist_ok=True)
        _dump_summary(case_dir, summary)
        return summary
    _, summary = execute_case(
        dag,
        case=payload["case"],
        k=payload["k"],
        time_limit=payload["time_limit"],
        deterministic=payload["deterministic"],
        out_dir=case_dir,
    )
    summary["seed"] = payload["seed"]
    return summary


@cli.command()
@click.option("--count", type=int, default=20, show_default=True)
@click.option("--nodes", type=int, default=6, show_default=True)
@click.option("--sensors", type=int, default=3, show_default=True)
@click.option("--edges", type=int, default=7, show_default=True)
@click.option("--cores", type=int, default=2, show_default=True)
@click.option("--fusion-types", default="w-fus,t-fus,i-fus", show_default=True,
              help="Comma list drawn from w-fus,t-fus,i-fus.")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--time-limit", type=float, default=600.0, show_default=True,
              help="Per-case solver budget in seconds.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--delta-multiplier", "k", type=int, default=3, show_default=True)
@click.option("--deterministic", is_flag=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def campaign(count, nodes, sensors, edges, cores, fusion_types, seed, time_limit,
             jobs, k, deterministic, out_dir) -> int:
    """Generate and solve a batch of random graphs; resumable by manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kinds = [t.strip() for t in fusion_types.split(",") if t.strip()]
    bad = [t for t in kinds if t not in _FUSION_FLAG]
    if bad or not kinds:
        click.echo(f"error: bad fusion types {bad or fusion_types!r}", err=True)
        return EXIT_INPUT
    config = {
        "count": count, "nodes": nodes, "sensors": sensors, "edges": edges,
        "cores": cores, "fusion_types": kinds, "seed": seed,
        "time_limit": time_limit, "k": k,
    }
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        if manifest["config"] != config:
            click.echo("error: out-dir holds a campaign with a different config", err=True)
            return EXIT_INPUT
    else:
        manifest = {
            "config": config,
            "cases": [
                {"case": f"case-{i:03d}", "seed": seed + i} for i in range(count)
            ],
        }
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")

    def is_done(case: str) -> bool:
        f = out / case / "run.json"
        if not f.exists():
            return False
        return json.loads(f.read_text()).get("status") not in (None, "running")

    todo = [c for c in manifest["cases"] if not is_done(c["case"])]
    click.echo(f"{len(manifest['cases'])} cases, {len(todo)} to run")
    payloads = [
        {
            **c, "nodes": nodes, "sensors": sensors, "edges": edges, "cores": cores,
            "fusion_types": kinds, "k": k, "time_limit": time_limit,
            "deterministic": deterministic, "out_dir": str(out),
        }
        for c in todo
    ]
    if jobs > 1 and payloads:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_campaign_case, p) for p in payloads]
            for fut in as_completed(futures):
                s = fut.result()
                click.echo(f"{s['case']}: {s['status']}")
    else:
        for p in payloads:
            s = _campaign_case(p)
            click.echo(f"{s['case']}: {s['status']}")
    ratio = _aggregate(out, manifest)
    click.echo(f"schedulability ratio: {ratio:.3f}")
    return EXIT_OK


def _aggregate(out: Path, manifest: dict) -> float:
    """Fold per-case artifacts into results.csv, distributions.csv, summary
    figure, and summary.json; returns the schedulability ratio."""
    rows, dist_rows = [], []
    feasible = 0
    seeds = {c["case"]: c.get("seed", "") for c in manifest["cases"]}
    cases = list(seeds)
    for case in cases:
        run_file = out / case / "run.json"
        summary = json.loads(run_file.read_text()) if run_file.exists() else {}
        status = summary.get("status", "missing")
        if status in (OPTIMAL, FEASIBLE_TIMEOUT):
            feasible += 1
        obj = summary.get("objective") or []
        rows.append(
            (case, seeds[case], status,
             summary.get("wall_time", ""), obj[0] if obj else "")
        )
        csv_file = out / case / "metrics.csv"
        if csv_file.exists():
            with open(csv_file) as fh:
                dist_rows.extend(tuple(r) for r in list(csv.reader(fh))[1:])
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("case", "seed", "status", "wall_time", "objective"))
        w.writerows(rows)
    with open(out / "distributions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fio.METRICS_CSV_COLUMNS)
        w.writerows(dist_rows)
    _distribution_figure(out, dist_rows)
    ratio = feasible / len(cases) if cases else 0.0
    (out / "summary.json").write_text(
        json.dumps(
            {"cases": len(cases), "feasible": feasible, "ratio": ratio}, indent=2
        )
        + "\n"
    )
    return ratio


def _distribution_figure(out: Path, dist_rows: list[tuple]) -> None:
    import matplotlib.pyplot as plt

    by_metric: dict[str, list[float]] = {}
    for _, metric, _, _, value in dist_rows:
        by_metric.setdefault(metric, []).append(float(value))
    fig, ax = plt.subplots(figsize=(7, 4))
    names = sorted(by_metric) or ["(none)"]
    ax.boxplot([by_metric.get(n, [0.0]) for n in names], tick_labels=names)
    ax.set_ylabel("value")
    ax.set_title("metric distributions across cases")
    fig.tight_layout()
    fig.savefig(out / "distributions.svg", metadata={"Date": None})
    plt.close(fig)


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_INPUT
    except click.Abort:
        return EXIT_INPUT
    return rv if isinstance(rv, int) else EXIT_OK
