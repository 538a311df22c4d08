"""Random task-graph generation: seeded, connected, type-assigned, table-buildable."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .expansion import ExpansionError, build_instance_table
from .graph import (
    DagSpec,
    MetricConfig,
    TaskSpec,
    TaskType,
    adjust_branch_successors,
    require_valid,
)

_FUSION_KINDS = (TaskType.W_FUSION, TaskType.T_FUSION, TaskType.I_FUSION)


class GenError(ValueError):
    """Configuration cannot produce a valid graph."""


@dataclass(frozen=True)
class GenConfig:
    """Knobs for one random graph; defaults mirror the evaluation campaign."""

    node_count: int = 6
    sensor_count: int | None = None  # None: half the nodes, at least 1
    edge_count: int | None = None  # None: twice the nodes, clamped to the valid range
    fusion_types: tuple[TaskType, ...] = _FUSION_KINDS
    core_count: int = 2
    seed: int = 0
    event_wcet: tuple[int, int] = (1, 5)
    utilization: tuple[float, float] = (0.1, 0.4)
    periods: tuple[int, ...] = (20, 40, 50, 100)
    max_tries: int = 500

    def resolved(self) -> tuple[int, int, int]:
        n = self.node_count
        s = self.sensor_count if self.sensor_count is not None else max(1, n // 2)
        lo, hi = n - 1, n * (n - 1) // 2
        if n < 2 or s < 1 or s > n:
            raise GenError(f"need 1 <= sensors <= nodes, nodes >= 2; got {n=} {s=}")
        if not self.fusion_types:
            raise GenError("empty fusion type set")
        bad = [k for k in self.fusion_types if k not in _FUSION_KINDS]
        if bad:
            raise GenError(f"not fusion types: {bad}")
        # sensors take no in-edges, so pairs inside the sensor block are unusable
        usable = hi - s * (s - 1) // 2
        m = (
            self.edge_count
            if self.edge_count is not None
            else min(max(2 * n, lo), hi, usable)
        )
        if not lo <= m <= min(hi, usable) or n == s:
            raise GenError(
                f"edge count {m} impossible for {n} nodes / {s} sensors "
                f"(valid: {lo}..{min(hi, usable) if n > s else 0})"
            )
        return n, s, m


def _sample_edges(rng: random.Random, n: int, s: int, m: int) -> set[tuple[int, int]]:
    """Forward edges over positions 0..n-1 (first s are sensors): every event
    node gains a predecessor, the undirected graph comes out connected, and the
    total is exactly m.

    A connected skeleton never needs more than n-1 <= m edges (one in-edge per
    event node plus one join per leftover sensor), so filling up to m with the
    remaining forward pairs always lands exactly on m."""
    root = list(range(n))

    def find(x: int) -> int:
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    edges: set[tuple[int, int]] = set()
    for b in range(s, n):
        a = rng.randrange(b)
        edges.add((a, b))
        root[find(a)] = find(b)
    while len({find(x) for x in range(n)}) > 1:
        options = [
            (a, b)
            for b in range(s, n)
            for a in range(b)
            if (a, b) not in edges and find(a) != find(b)
        ]
        a, b = rng.choice(options)
        edges.add((a, b))
        root[find(a)] = find(b)
    extras = [(a, b) for b in range(s, n) for a in range(b) if (a, b) not in edges]
    rng.shuffle(extras)
    edges.update(extras[: m - len(edges)])
    return edges


def _has_path(dag: DagSpec, src: str, dst: str) -> bool:
    seen, stack = set(), [src]
    while stack:
        x = stack.pop()
        if x == dst:
            return True
        if x in seen:
            continue
        seen.add(x)
        stack.extend(dag.succs(x))
    return False


def _draw(cfg: GenConfig, rng: random.Random) -> DagSpec:
    n, s, m = cfg.resolved()
    edges = _sample_edges(rng, n, s, m)
    preds: dict[int, list[int]] = {b: [] for b in range(n)}
    for a, b in sorted(edges):
        preds[b].append(a)
    names = [f"t{i + 1}" for i in range(n)]
    tasks = []
    for i in range(n):
        pnames = tuple(names[a] for a in preds[i])
        if i < s:
            kind = TaskType.SENSOR
        elif len(pnames) == 1:
            kind = TaskType.SUBSCRIPTION
        else:
            kind = rng.choice(sorted(cfg.fusion_types, key=lambda k: k.value))
        if kind.is_timer:
            period = rng.choice(cfg.periods)
            u = rng.uniform(*cfg.utilization)
            wcet = max(1, round(u * period))
        else:
            period = None
            wcet = rng.randint(*cfg.event_wcet)
        tasks.append(TaskSpec(names[i], kind, wcet, period=period, preds=pnames))
    return DagSpec(
        name=f"gen-{cfg.seed}",
        cores=cfg.core_count,
        tasks=tuple(tasks),
        metrics=MetricConfig(),
    )


def generate(cfg: GenConfig) -> DagSpec:
    """Draw graphs until one validates, expands steadily, and links the default
    sensor/sink pair; deterministic for a given config."""
    cfg.resolved()
    rng = random.Random(cfg.seed)
    last = ""
    for _ in range(cfg.max_tries):
        dag = adjust_branch_successors(_draw(cfg, rng))
        try:
            dag = require_valid(dag)
            build_instance_table(dag, k=3)
        except (ValueError, ExpansionError) as e:
            last = str(e)
            continue
        sensor = dag.sensors()[0]
        sink = dag.sinks()[-1]
        if not _has_path(dag, sensor, sink):
            last = f"no path {sensor}->{sink} for the default response-time pair"
            continue
        return dag
    raise GenError(f"no viable graph in {cfg.max_tries} draws (last: {last})")
