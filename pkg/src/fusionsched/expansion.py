"""Instance expansion: hyperperiod, per-task instance counts, phase windows."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import DagSpec, TaskType


class ExpansionError(ValueError):
    pass


def hyperperiod(dag: DagSpec) -> int:
    periods = [t.period for t in dag.tasks if t.kind.is_timer and t.period]
    if not periods:
        raise ExpansionError("no timer tasks, hyperperiod undefined")
    return math.lcm(*periods)


def n_ins(dag: DagSpec, delta: int, memo: dict[str, int] | None = None) -> dict[str, int]:
    """Instance count of every task over the window [0, delta).

    Timer tasks release every period; a subscription mirrors its predecessor;
    a wait-for-all fusion runs once per full round of fresh inputs (min);
    an immediate fusion runs once per input arrival after the first full set.
    """
    counts: dict[str, int] = {}
    for name in dag.topo_order():
        t = dag.task(name)
        if t.kind.is_timer:
            counts[name] = math.ceil(delta / t.period)
        elif t.kind is TaskType.SUBSCRIPTION:
            counts[name] = counts[t.preds[0]]
        elif t.kind is TaskType.W_FUSION:
            counts[name] = min(counts[p] for p in t.preds)
        else:  # immediate fusion
            counts[name] = sum(counts[p] for p in t.preds) - (len(t.preds) - 1)
    return counts


@dataclass(frozen=True)
class Instance:
    task: str
    index: int  # 1-based
    phase: int  # 1..k hyperperiod window the instance falls in
    release: int | None  # absolute, timer tasks only


@dataclass(frozen=True)
class InstanceTable:
    """All task instances over delta = k hyperperiods, with phase bookkeeping.

    window_counts[task][p] is the instance count over [0, p*hp); the steady
    count is the per-hyperperiod increment once warm-up is over, and must be
    the same for every window past the first or the horizon is too short to
    reach a periodic steady state.
    """

    dag: DagSpec
    hp: int
    k: int
    delta: int
    counts: dict[str, int]
    window_counts: dict[str, tuple[int, ...]]
    steady: dict[str, int]
    instances: tuple[Instance, ...]

    def count(self, task: str) -> int:
        return self.counts[task]

    def instances_of(self, task: str) -> tuple[Instance, ...]:
        return tuple(i for i in self.instances if i.task == task)

    def phase_of(self, task: str, index: int) -> int:
        wc = self.window_counts[task]
        for p in range(1, self.k + 1):
            if index <= wc[p]:
                return p
        raise KeyError((task, index))

    def release_of(self, task: str, index: int) -> int:
        t = self.dag.task(task)
        if not t.kind.is_timer:
            raise KeyError(f"{task} is event-triggered")
        return t.period * (index - 1)

    def mirror(self, task: str, index: int) -> int:
        """Index of the same instance one hyperperiod later."""
        return index + self.steady[task]

    def eval_indices(self, task: str) -> range:
        """Indices outside the warm-up phase (phases 2..k), used for metrics."""
        return range(self.window_counts[task][1] + 1, self.counts[task] + 1)


def build_instance_table(dag: DagSpec, k: int = 3) -> InstanceTable:
    if k < 2:
        raise ExpansionError("window must span at least 2 hyperperiods")
    hp = hyperperiod(dag)
    delta = k * hp
    window_counts = {t.name: [0] * (k + 1) for t in dag.tasks}
    for p in range(1, k + 1):
        for name, c in n_ins(dag, p * hp).items():
            window_counts[name][p] = c

    steady: dict[str, int] = {}
    for t in dag.tasks:
        wc = window_counts[t.name]
        incs = {wc[p + 1] - wc[p] for p in range(1, k)}
        if len(incs) != 1:
            raise ExpansionError(
                f"{t.name}: instance count not periodic past warm-up "
                f"(window counts {wc}); horizon does not reach steady state"
            )
        steady[t.name] = incs.pop()
        if steady[t.name] <= 0:
            raise ExpansionError(f"{t.name}: no instances per hyperperiod")

    counts = {name: wc[k] for name, wc in window_counts.items()}
    instances = []
    for t in dag.tasks:
        wc = window_counts[t.name]
        for j in range(1, counts[t.name] + 1):
            phase = next(p for p in range(1, k + 1) if j <= wc[p])
            rel = t.period * (j - 1) if t.kind.is_timer else None
            instances.append(Instance(t.name, j, phase, rel))
    return InstanceTable(
        dag=dag,
        hp=hp,
        k=k,
        delta=delta,
        counts=counts,
        window_counts={n: tuple(w) for n, w in window_counts.items()},
        steady=steady,
        instances=tuple(instances),
    )


def used_index_bounds(table: InstanceTable, task: str, pred: str, j: int) -> tuple[int, int]:
    """Feasible producer-instance index range for one fusion instance.

    Wait-for-all consumes strictly increasing rounds, so instance j uses
    exactly the j..(n_p - (n_i - j)) window collapsed to [j, n_p-(n_i-j)].
    Immediate fusion only guarantees monotone reuse plus one fresh input per
    instance, which bounds the sum of used indices from below.
    """
    t = table.dag.task(task)
    n_i = table.counts[task]
    n_p = table.counts[pred]
    if t.kind is TaskType.W_FUSION:
        return j, n_p - (n_i - j)
    if t.kind is TaskType.I_FUSION:
        others = sum(table.counts[q] for q in t.preds if q != pred)
        lo = max(1, len(t.preds) + (j - 1) - others)
        return lo, n_p
    if t.kind is TaskType.T_FUSION:
        return 1, n_p
    raise ValueError(f"{task} is not a fusion")


def time_windows(table: InstanceTable) -> tuple[dict[tuple[str, int], int], dict[tuple[str, int], int]]:
    """Earliest-start / latest-finish bounds per instance, from trigger and
    deadline structure only (no core contention). Sound for pruning."""
    dag = table.dag
    est: dict[tuple[str, int], int] = {}
    lft: dict[tuple[str, int], int] = {}
    order = dag.topo_order()
    for name in order:
        t = dag.task(name)
        n = table.counts[name]
        d = dag.deadline_of(name)
        for j in range(1, n + 1):
            lo = est.get((name, j - 1), 0) + t.wcet if j > 1 else 0
            if t.kind.is_timer:
                lo = max(lo, table.release_of(name, j))
                if t.kind is TaskType.T_FUSION:
                    # still needs one finished instance of every input
                    lo = max(lo, max(est[(p, 1)] + dag.task(p).wcet for p in t.preds))
                hi = table.release_of(name, j) + d
            elif t.kind is TaskType.SUBSCRIPTION:
                p = t.preds[0]
                lo = max(lo, est[(p, j)] + dag.task(p).wcet)
                hi = lft[(p, j)] + d
            elif t.kind is TaskType.W_FUSION:
                lo = max(lo, max(est[(p, j)] + dag.task(p).wcet for p in t.preds))
                hi = max(lft[(p, used_index_bounds(table, name, p, j)[1])] for p in t.preds) + d
            else:  # immediate fusion
                if j == 1:
                    lo = max(lo, max(est[(p, 1)] + dag.task(p).wcet for p in t.preds))
                    hi = max(lft[(p, 1)] for p in t.preds) + d
                else:
                    lo = max(
                        lo,
                        max(
                            est[(p, used_index_bounds(table, name, p, j)[0])]
                            + dag.task(p).wcet
                            for p in t.preds
                        ),
                    )
                    hi = max(lft[(p, table.counts[p])] for p in t.preds) + d
            est[(name, j)] = lo
            lft[(name, j)] = hi
        # backward pass: an instance must leave room for its successors in the chain
        for j in range(n - 1, 0, -1):
            lft[(name, j)] = min(lft[(name, j)], lft[(name, j + 1)] - t.wcet)
    return est, lft
