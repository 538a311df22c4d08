"""Task-graph model: five task types, validation, producer resolution."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class TaskType(enum.Enum):
    SENSOR = "sensor"
    SUBSCRIPTION = "subscription"
    T_FUSION = "t-fusion"
    W_FUSION = "w-fusion"
    I_FUSION = "i-fusion"

    @property
    def is_timer(self) -> bool:
        return self in (TaskType.SENSOR, TaskType.T_FUSION)

    @property
    def is_fusion(self) -> bool:
        return self in (TaskType.T_FUSION, TaskType.W_FUSION, TaskType.I_FUSION)


METRIC_NAMES = ("mrt", "mtd", "paoi", "wcrt", "ms")


@dataclass(frozen=True)
class TaskSpec:
    """One task: id, trigger type, WCET, optional period/deadline, ordered predecessors."""

    name: str
    kind: TaskType
    wcet: int
    period: int | None = None
    deadline: int | None = None
    preds: tuple[str, ...] = ()


@dataclass(frozen=True)
class ObjectiveTerm:
    metric: str
    weight: int = 1
    priority: int = 1


@dataclass(frozen=True)
class MetricConfig:
    """Which metrics to optimize/report, over which sinks and sensor->sink pairs.

    ``sinks=None`` means every sink of the graph; ``wcrt_pairs=None`` means the
    single pair (first sensor in task order, last sink in task order).
    """

    objective: tuple[ObjectiveTerm, ...] = tuple(
        ObjectiveTerm(m) for m in METRIC_NAMES
    )
    sinks: tuple[str, ...] | None = None
    wcrt_pairs: tuple[tuple[str, str], ...] | None = None


@dataclass(frozen=True)
class DagSpec:
    name: str
    cores: int
    tasks: tuple[TaskSpec, ...]
    metrics: MetricConfig = field(default_factory=MetricConfig)

    def task(self, name: str) -> TaskSpec:
        return self._by_name[name]

    @property
    def _by_name(self) -> dict[str, TaskSpec]:
        d = self.__dict__.get("_by_name_cache")
        if d is None:
            d = {t.name: t for t in self.tasks}
            object.__setattr__(self, "_by_name_cache", d)
        return d

    def succs(self, name: str) -> tuple[str, ...]:
        return tuple(t.name for t in self.tasks if name in t.preds)

    def sensors(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tasks if t.kind is TaskType.SENSOR)

    def sinks(self) -> tuple[str, ...]:
        has_succ = {p for t in self.tasks for p in t.preds}
        return tuple(t.name for t in self.tasks if t.name not in has_succ)

    def deadline_of(self, name: str) -> int:
        """Resolved relative deadline: explicit, else period for timer tasks,
        else the largest timer period in the graph for event tasks."""
        t = self.task(name)
        if t.deadline is not None:
            return t.deadline
        if t.kind.is_timer:
            assert t.period is not None
            return t.period
        return max(x.period for x in self.tasks if x.kind.is_timer and x.period)

    def topo_order(self) -> tuple[str, ...]:
        indeg = {t.name: len(t.preds) for t in self.tasks}
        out: list[str] = [n for n, d in indeg.items() if d == 0]
        i = 0
        while i < len(out):
            for s in self.succs(out[i]):
                indeg[s] -= 1
                if indeg[s] == 0:
                    out.append(s)
            i += 1
        if len(out) != len(self.tasks):
            raise ValueError("graph contains a cycle")
        return tuple(out)


@dataclass(frozen=True)
class ProducerMap:
    """producer_of: nearest sensor-or-fusion ancestor (self for those types);
    pred_producers: per fusion, the producer behind each predecessor edge."""

    producer_of: dict[str, str]
    pred_producers: dict[str, tuple[str, ...]]


def validate(dag: DagSpec) -> list[str]:
    """Structural checks; returns a list of violations (empty list == valid)."""
    errs: list[str] = []
    seen: set[str] = set()
    for t in dag.tasks:
        if t.name in seen:
            errs.append(f"duplicate task id {t.name!r}")
        seen.add(t.name)
    if dag.cores < 1:
        errs.append("core count must be >= 1")

    for t in dag.tasks:
        if not isinstance(t.wcet, int) or t.wcet <= 0:
            errs.append(f"{t.name}: wcet must be a positive integer")
        for p in t.preds:
            if p not in seen:
                errs.append(f"{t.name}: unknown predecessor {p!r}")
            if p == t.name:
                errs.append(f"{t.name}: self-loop")
        if len(set(t.preds)) != len(t.preds):
            errs.append(f"{t.name}: duplicate predecessor edge")

        # arity / period rules per type
        if t.kind is TaskType.SENSOR:
            if t.preds:
                errs.append(f"{t.name}: sensor cannot have predecessors")
        elif t.kind is TaskType.SUBSCRIPTION:
            if len(t.preds) != 1:
                errs.append(f"{t.name}: subscription needs exactly one predecessor")
        else:
            if not t.preds:
                errs.append(f"{t.name}: fusion needs at least one predecessor")
        if t.kind.is_timer:
            if t.period is None or (isinstance(t.period, int) and t.period <= 0):
                errs.append(f"{t.name}: timer task needs a positive period")
        elif t.period is not None:
            errs.append(f"{t.name}: period set on event-triggered task")
        if t.deadline is not None and t.deadline <= 0:
            errs.append(f"{t.name}: non-positive deadline")

    if not dag.sensors():
        errs.append("graph needs at least one sensor")
    if not any(t.kind.is_timer for t in dag.tasks):
        errs.append("graph needs at least one timer task")

    try:
        dag.topo_order()
        if not dag.sinks():
            errs.append("graph needs at least one sink")
        if not errs:
            for t in dag.tasks:
                if dag.deadline_of(t.name) < t.wcet:
                    errs.append(f"{t.name}: deadline shorter than wcet")
    except ValueError as e:
        errs.append(str(e))

    mc = dag.metrics
    names = {t.name for t in dag.tasks}
    for term in mc.objective:
        if term.metric not in METRIC_NAMES:
            errs.append(f"unknown metric {term.metric!r}")
        if term.weight < 0:
            errs.append(f"negative weight on {term.metric}")
    if mc.objective and all(t.weight == 0 for t in mc.objective):
        errs.append("objective has no positive weight")
    for s in mc.sinks or ():
        if s not in names:
            errs.append(f"metric sink {s!r} is not a task")
    for pair in mc.wcrt_pairs or ():
        src, dst = pair
        if src not in names or dst not in names:
            errs.append(f"wcrt pair {pair} references unknown task")
        elif dag.task(src).kind is not TaskType.SENSOR:
            errs.append(f"wcrt source {src!r} is not a sensor")
    return errs


def normalize(dag: DagSpec) -> DagSpec:
    """Fill unset deadlines with their defaults so every TaskSpec is explicit."""
    tasks = tuple(
        t if t.deadline is not None else replace(t, deadline=dag.deadline_of(t.name))
        for t in dag.tasks
    )
    return replace(dag, tasks=tasks)


def require_valid(dag: DagSpec) -> DagSpec:
    """Raise on any violation; otherwise return the normalized graph."""
    errs = validate(dag)
    if errs:
        raise ValueError("invalid task graph: " + "; ".join(errs))
    return normalize(dag)


def compute_producers(dag: DagSpec) -> ProducerMap:
    producer: dict[str, str] = {}
    for name in dag.topo_order():
        t = dag.task(name)
        if t.kind is TaskType.SUBSCRIPTION:
            producer[name] = producer[t.preds[0]]
        else:
            producer[name] = name  # sensors and fusions publish their own result
    pred_prod = {
        t.name: tuple(producer[p] for p in t.preds)
        for t in dag.tasks
        if t.kind.is_fusion
    }
    return ProducerMap(producer_of=producer, pred_producers=pred_prod)


def adjust_branch_successors(dag: DagSpec) -> DagSpec:
    """Retype subscription successors of branching nodes as single-input
    immediate fusions, so each branch buffers its own copy of the data."""
    out_deg: dict[str, int] = {}
    for t in dag.tasks:
        for p in t.preds:
            out_deg[p] = out_deg.get(p, 0) + 1
    new_tasks = []
    for t in dag.tasks:
        if (
            t.kind is TaskType.SUBSCRIPTION
            and out_deg.get(t.preds[0], 0) > 1
        ):
            t = replace(t, kind=TaskType.I_FUSION)
        new_tasks.append(t)
    return replace(dag, tasks=tuple(new_tasks))
