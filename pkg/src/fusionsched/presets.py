"""Built-in example graphs, addressable as ``name`` or ``name:args``."""
from __future__ import annotations

from .graph import (
    DagSpec,
    MetricConfig,
    ObjectiveTerm,
    TaskSpec,
    TaskType,
    adjust_branch_successors,
    require_valid,
)

SEN = TaskType.SENSOR
SUB = TaskType.SUBSCRIPTION
TFUS = TaskType.T_FUSION
WFUS = TaskType.W_FUSION
IFUS = TaskType.I_FUSION

_FUSION_TAGS = {
    "w-fus": WFUS,
    "t-fus": TFUS,
    "i-fus": IFUS,
    "w-fusion": WFUS,
    "t-fusion": TFUS,
    "i-fusion": IFUS,
}


class PresetError(ValueError):
    """Unknown preset name or bad preset arguments."""


def _fusion(tag: str) -> TaskType:
    try:
        return _FUSION_TAGS[tag]
    except KeyError:
        raise PresetError(f"unknown fusion type {tag!r} (want w-fus/t-fus/i-fus)") from None


def _objective(*metrics: str) -> tuple[ObjectiveTerm, ...]:
    return tuple(ObjectiveTerm(m) for m in metrics)


def two_chains(cfg: str = "WS") -> DagSpec:
    """Two sensor chains joined by a fusion stage, five trigger configurations.

    cfg picks the types of the fusion task t5 and the actuator t7 plus the
    periods: WS, WT, TS, TT, or NH (non-harmonic sensor periods).
    """
    table = {
        #        t5     t7    T1   T2   T5    T7
        "WS":  (WFUS,  SUB,  360, 360, None, None),
        "WT":  (WFUS, TFUS,  420, 420, None,  840),
        "TS":  (TFUS,  SUB,  420, 420,  840, None),
        "TT":  (TFUS, TFUS,  480, 480,  960,  960),
        "NH":  (TFUS, TFUS,  480, 360,  960,  960),
    }
    if cfg not in table:
        raise PresetError(f"two-chains config {cfg!r}: want one of {sorted(table)}")
    k5, k7, t1, t2, t5, t7 = table[cfg]
    return DagSpec(
        name=f"fusion-two-chains-{cfg}",
        cores=1,
        tasks=(
            TaskSpec("t1", SEN, 10, period=t1),
            TaskSpec("t2", SEN, 20, period=t2),
            TaskSpec("t3", SUB, 10, preds=("t1",)),
            TaskSpec("t4", SUB, 20, preds=("t2",)),
            TaskSpec("t5", k5, 30, period=t5, preds=("t3", "t4")),
            TaskSpec("t6", SUB, 30, preds=("t5",)),
            TaskSpec("t7", k7, 30, period=t7, preds=("t6",)),
        ),
        metrics=MetricConfig(
            # equal-weight blend has ties on some configs; the secondary paoi
            # level picks the min-PAoI point of the optimal face, deterministically
            objective=_objective("mrt", "mtd", "paoi", "wcrt")
            + (ObjectiveTerm("paoi", 1, 2),),
            sinks=("t7",),
            wcrt_pairs=(("t1", "t7"),),
        ),
    )


def navigation(m: int = 3, fusion: str = "w-fus", period: int | None = None) -> DagSpec:
    """m camera sensors fused into a pipeline ending at an actuator."""
    m = int(m)
    if m < 1:
        raise PresetError("navigation needs m >= 1")
    kind = _fusion(fusion)
    if kind is TFUS and period is None:
        raise PresetError("navigation with fusion=t-fus needs period=<int>")
    if kind is not TFUS and period is not None:
        raise PresetError("navigation: period only applies to fusion=t-fus")
    cams = tuple(f"cam{i}" for i in range(1, m + 1))
    stages = ("perception", "planning", "control", "actuator")
    tasks = [TaskSpec(c, SEN, 5, period=100) for c in cams]
    tasks.append(
        TaskSpec("fusion", kind, 10, period=int(period) if period else None, preds=cams)
    )
    prev = "fusion"
    for s in stages:
        tasks.append(TaskSpec(s, SUB, 10, preds=(prev,)))
        prev = s
    return DagSpec(
        name=f"navigation-m{m}" + (f"-{fusion}" if kind is not WFUS else ""),
        cores=1,
        tasks=tuple(tasks),
        metrics=MetricConfig(sinks=("actuator",), wcrt_pairs=(("cam1", "actuator"),)),
    )


def two_sensor(setting: str = "1", fusion: str = "i-fus") -> DagSpec:
    """Two sensors into one fusion sink; two period settings, one or two cores."""
    table = {"1": ((5, 7), 1), "2": ((3, 4), 2)}
    if str(setting) not in table:
        raise PresetError(f"two-sensor-fusion setting {setting!r}: want 1 or 2")
    (p1, p2), cores = table[str(setting)]
    kind = _fusion(fusion)
    return DagSpec(
        name=f"two-sensor-fusion-{setting}-{fusion}",
        cores=cores,
        tasks=(
            TaskSpec("t1", SEN, 1, period=p1),
            TaskSpec("t2", SEN, 1, period=p2),
            TaskSpec("t3", kind, 1, preds=("t1", "t2")),
        ),
        metrics=MetricConfig(objective=_objective("mrt", "mtd")),
    )


def branch(cfg: str = "A") -> DagSpec:
    """A sensor pair whose data meets twice: directly and via a side branch."""
    if cfg not in ("A", "B"):
        raise PresetError(f"branch config {cfg!r}: want A or B")
    if cfg == "A":
        t1 = TaskSpec("t1", SEN, 5, period=20)
        t4 = TaskSpec("t4", WFUS, 5, preds=("t1", "t2"))
    else:
        t1 = TaskSpec("t1", SEN, 5, period=15)
        t4 = TaskSpec("t4", TFUS, 5, period=30, preds=("t1", "t2"))
    return DagSpec(
        name=f"branch-{cfg}",
        cores=2,
        tasks=(
            t1,
            TaskSpec("t2", SEN, 7, period=20),
            TaskSpec("t3", IFUS, 5, preds=("t1",)),
            t4,
            TaskSpec("t5", WFUS, 5, preds=("t3", "t4")),
        ),
        metrics=MetricConfig(objective=_objective("mrt", "mtd", "paoi")),
    )


def count_demo() -> DagSpec:
    """Eleven tasks exercising every instance-counting rule (unit WCETs)."""
    return DagSpec(
        name="count-demo",
        cores=1,
        tasks=(
            TaskSpec("t1", SEN, 1, period=10),
            TaskSpec("t2", SEN, 1, period=20),
            TaskSpec("t3", SEN, 1, period=15),
            TaskSpec("t4", SEN, 1, period=30),
            TaskSpec("t5", SUB, 1, preds=("t1",)),
            TaskSpec("t6", SUB, 1, preds=("t2",)),
            TaskSpec("t7", SUB, 1, preds=("t2",)),
            TaskSpec("t8", IFUS, 1, preds=("t3", "t4")),
            TaskSpec("t9", SUB, 1, preds=("t6",)),
            TaskSpec("t10", TFUS, 1, period=20, preds=("t5", "t9")),
            TaskSpec("t11", WFUS, 1, preds=("t7", "t8")),
        ),
        metrics=MetricConfig(wcrt_pairs=(("t1", "t10"),)),
    )


def three_chains(fusion: str = "t-fus", period: int = 15) -> DagSpec:
    """Three sensor chains of different lengths meeting at one fusion task."""
    kind = _fusion(fusion)
    return DagSpec(
        name=f"three-chain-fusion-{fusion}",
        cores=2,
        tasks=(
            TaskSpec("t1", SEN, 2, period=20),
            TaskSpec("t2", SEN, 2, period=20),
            TaskSpec("t3", SEN, 2, period=20),
            TaskSpec("t4", SUB, 2, preds=("t1",)),
            TaskSpec("t5", SUB, 2, preds=("t2",)),
            TaskSpec("t6", SUB, 2, preds=("t4",)),
            TaskSpec("t7", SUB, 2, preds=("t5",)),
            TaskSpec("t8", SUB, 2, preds=("t3",)),
            TaskSpec("t9", kind, 4, period=int(period) if kind is TFUS else None,
                     preds=("t6", "t7", "t8")),
        ),
    )


_CATALOG: dict[str, tuple] = {
    "fusion-two-chains": (two_chains, "fusion-two-chains:WS|WT|TS|TT|NH"),
    "navigation": (navigation, "navigation:m=3[,fusion=t-fus,period=100]"),
    "two-sensor-fusion": (two_sensor, "two-sensor-fusion:1|2,i-fus|w-fus"),
    "branch": (branch, "branch:A|B"),
    "count-demo": (count_demo, "count-demo"),
    "three-chain-fusion": (three_chains, "three-chain-fusion[:t-fus|w-fus|i-fus]"),
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


def preset_usage() -> dict[str, str]:
    return {name: usage for name, (_, usage) in sorted(_CATALOG.items())}


def get_preset(spec: str) -> DagSpec:
    """Build a catalog graph from ``name`` or ``name:arg,key=value,...``."""
    name, _, argtext = spec.partition(":")
    if name not in _CATALOG:
        raise PresetError(f"unknown preset {name!r}; valid: {', '.join(preset_names())}")
    builder, usage = _CATALOG[name]
    args: list[str] = []
    kwargs: dict[str, str] = {}
    for tok in filter(None, (t.strip() for t in argtext.split(","))):
        key, eq, val = tok.partition("=")
        if eq:
            kwargs[key] = val
        else:
            args.append(tok)
    try:
        dag = builder(*args, **kwargs)
    except TypeError:
        raise PresetError(f"bad arguments {argtext!r}; usage: {usage}") from None
    return require_valid(adjust_branch_successors(dag))
