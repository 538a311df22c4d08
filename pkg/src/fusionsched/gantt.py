"""Schedule timelines as deterministic SVG: one lane per core, arrows at triggers."""
from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fusionsched"
matplotlib.rcParams["svg.fonttype"] = "none"  # keep labels selectable text

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .graph import DagSpec
from .schedule import Schedule

_LANE_H = 0.7


def _triggers(schedule: Schedule, dag: DagSpec) -> dict[tuple[str, int], float]:
    """Triggering time per fusion instance: period tick for timer fusion,
    newest used input finish otherwise."""
    by = schedule.by_key()
    out: dict[tuple[str, int], float] = {}
    for e in schedule.entries:
        kind = dag.task(e.task).kind
        if not kind.is_fusion:
            continue
        if kind.is_timer:
            out[(e.task, e.index)] = (e.index - 1) * dag.task(e.task).period
        elif e.uses:
            out[(e.task, e.index)] = max(by[(p, j)].finish for p, j in e.uses.items())
    return out


def render_gantt(schedule: Schedule, dag: DagSpec) -> str:
    """SVG text; identical input gives identical bytes."""
    entries = sorted(schedule.entries, key=lambda e: (e.task, e.index))
    tasks = [t.name for t in dag.tasks]
    cmap = plt.get_cmap("tab20")
    color = {t: cmap(i % 20) for i, t in enumerate(tasks)}
    lanes = max(1, schedule.cores)

    fig, ax = plt.subplots(figsize=(max(6.0, schedule.delta / 40.0), 1.0 + lanes))
    for e in entries:
        (bar,) = ax.barh(
            e.core,
            e.finish - e.start,
            left=e.start,
            height=_LANE_H,
            color=color[e.task],
            edgecolor="black",
            linewidth=0.5,
        )
        bar.set_gid(f"bar-{e.task}.{e.index}")
        ax.text(
            (e.start + e.finish) / 2.0,
            e.core,
            f"{e.task}.{e.index}",
            ha="center",
            va="center",
            fontsize=7,
        )
    for (task, j), t in sorted(_triggers(schedule, dag).items()):
        lane = schedule.by_key()[(task, j)].core
        arrow = ax.annotate(
            "",
            xy=(t, lane - _LANE_H / 2),
            xytext=(t, lane - _LANE_H),
            arrowprops={"arrowstyle": "->", "color": "crimson", "lw": 1.0},
        )
        # the gid must sit on the arrow patch: the empty text node is dropped
        arrow.arrow_patch.set_gid(f"trigger-{task}.{j}")
    ax.set_yticks(range(lanes), [f"core {c}" for c in range(lanes)])
    ax.set_ylim(-1, lanes)
    ax.set_xlim(0, max([schedule.delta, *(e.finish for e in entries)] or [1]))
    ax.set_xlabel("time")
    ax.set_title(schedule.case)
    ax.grid(axis="x", linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def save_gantt(schedule: Schedule, dag: DagSpec, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(render_gantt(schedule, dag))
    return path
