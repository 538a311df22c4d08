"""Exhaustive optimality oracle for tiny task graphs.

Independent of the ILP route: enumerates every data-use structure, every
canonical core assignment and every per-core ordering, then optimizes the
start times of each leaf with plain LPs. Event-triggered fusion deadlines
(finish within D of the newest used input) are disjunctive, so each leaf
branches lazily on the witness input until no deadline is violated.
"""
from __future__ import annotations

import time
from itertools import product

import numpy as np
from scipy.optimize import linprog

from .expansion import InstanceTable, used_index_bounds
from .graph import DagSpec, MetricConfig, TaskType
from .model import metric_targets
from .schedule import Schedule, ScheduledInstance
from .solve import SolveOutcome

Key = tuple[str, int]


class CapError(ValueError):
    """The problem is larger than the oracle's configured caps."""


class BudgetError(RuntimeError):
    """The oracle's wall-clock budget ran out before the search finished."""


class _Budget:
    def __init__(self, seconds: float | None):
        self.deadline = None if seconds is None else time.perf_counter() + seconds

    def check(self) -> None:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise BudgetError("oracle wall-clock budget exhausted")


def _round9(v: float) -> float:
    return round(v, 9)


def _near_int(v: float):
    return int(round(v)) if abs(v - round(v)) <= 1e-6 else v


# -- data-use structures -------------------------------------------------------


def _task_u_choices(dag: DagSpec, table: InstanceTable, name: str, budget: _Budget):
    """All complete per-instance used-index maps of one fusion task.

    Chooses freely over the first two hyperperiod windows and derives the rest
    by steady-shift copies; any derived value that breaks the index bounds,
    the monotone-use rules, or fresh-round/fresh-input rules kills the branch.
    """
    t = dag.task(name)
    n = table.counts[name]
    free_n = table.window_counts[name][min(2, table.k)]
    strict = t.kind is TaskType.W_FUSION

    def finish(rows: list[dict[str, int]]):
        uses = {j: rows[j - 1] for j in range(1, free_n + 1)}
        c = table.steady[name]
        for j in range(free_n + 1, n + 1):
            uses[j] = {p: uses[j - c][p] + table.steady[p] for p in t.preds}
        for j in range(1, n + 1):
            phase = table.phase_of(name, j)
            for p in t.preds:
                jp = uses[j][p]
                lo, hi = used_index_bounds(table, name, p, j)
                if not (lo <= jp <= min(hi, table.counts[p])):
                    return None
                if 2 <= phase <= table.k - 1 and jp > table.window_counts[p][phase]:
                    return None  # a copied row may not read data from later phases
            if j > 1:
                for p in t.preds:
                    if uses[j][p] < uses[j - 1][p] + (1 if strict else 0):
                        return None
                if t.kind is TaskType.I_FUSION and sum(uses[j].values()) <= sum(uses[j - 1].values()):
                    return None
        return uses

    def rec(j: int, prev: dict[str, int], rows: list[dict[str, int]]):
        budget.check()
        if j > free_n:
            full = finish(rows)
            if full is not None:
                yield full
            return
        phase = table.phase_of(name, j)
        ranges = []
        for p in t.preds:
            lo, hi = used_index_bounds(table, name, p, j)
            lo = max(lo, 1, prev[p] + 1 if strict else prev[p])
            hi = min(hi, table.counts[p])
            if 2 <= phase <= table.k - 1:
                hi = min(hi, table.window_counts[p][phase])
            ranges.append(range(lo, hi + 1))
        prev_sum = sum(prev.values())
        for combo in product(*ranges):
            if t.kind is TaskType.I_FUSION and j > 1 and sum(combo) <= prev_sum:
                continue
            yield from rec(j + 1, dict(zip(t.preds, combo)), rows + [dict(zip(t.preds, combo))])

    yield from rec(1, {p: 0 for p in t.preds}, [])


def _iter_u_structures(dag: DagSpec, table: InstanceTable, budget: _Budget):
    """Cross product of per-fusion-task choices, flattened to (task, j) -> uses."""
    fusions = [n for n in dag.topo_order() if dag.task(n).kind.is_fusion]

    def rec(i: int, acc: dict[Key, dict[str, int]]):
        if i == len(fusions):
            yield dict(acc)
            return
        name = fusions[i]
        for uses in _task_u_choices(dag, table, name, budget):
            for j, m in uses.items():
                acc[(name, j)] = m
            yield from rec(i + 1, acc)
            for j in uses:
                del acc[(name, j)]

    yield from rec(0, {})


# -- fixed-structure time bounds ----------------------------------------------


def _bounds_for(dag: DagSpec, table: InstanceTable, uses: dict[Key, dict[str, int]]):
    """Earliest-start / latest-finish per instance once data uses are fixed.

    Sound bounds only (no core contention); None when some window collapses.
    """
    est: dict[Key, int] = {}
    lft: dict[Key, int] = {}
    for name in dag.topo_order():
        t = dag.task(name)
        n, e, d = table.counts[name], dag.task(name).wcet, dag.deadline_of(name)
        for j in range(1, n + 1):
            lo = est[(name, j - 1)] + e if j > 1 else 0
            if t.kind.is_timer:
                rel = table.release_of(name, j)
                lo, hi = max(lo, rel), rel + d
                if t.kind is TaskType.T_FUSION:
                    lo = max(lo, max(est[(p, uses[(name, j)][p])] + dag.task(p).wcet for p in t.preds))
            elif t.kind is TaskType.SUBSCRIPTION:
                p = t.preds[0]
                lo = max(lo, est[(p, j)] + dag.task(p).wcet)
                hi = lft[(p, j)] + d
            else:
                lo = max(lo, max(est[(p, uses[(name, j)][p])] + dag.task(p).wcet for p in t.preds))
                if t.kind is TaskType.I_FUSION and j == 1:
                    hi = max(lft[(p, 1)] for p in t.preds) + d
                else:
                    hi = max(lft[(p, uses[(name, j)][p])] for p in t.preds) + d
            est[(name, j)], lft[(name, j)] = lo, hi
        for j in range(n - 1, 0, -1):
            lft[(name, j)] = min(lft[(name, j)], lft[(name, j + 1)] - e)

    # steady copies are pinned one hyperperiod apart; tighten both directions
    hp = table.hp
    for _ in range(2):
        changed = False
        for t in dag.tasks:
            c = table.steady[t.name]
            for j in range(table.window_counts[t.name][1] + 1, table.counts[t.name] + 1 - c):
                a, b = (t.name, j), (t.name, j + c)
                if est[b] < est[a] + hp:
                    est[b] = est[a] + hp
                    changed = True
                if est[a] < est[b] - hp:
                    est[a] = est[b] - hp
                    changed = True
                if lft[a] > lft[b] - hp:
                    lft[a] = lft[b] - hp
                    changed = True
                if lft[b] > lft[a] + hp:
                    lft[b] = lft[a] + hp
                    changed = True
        if not changed:
            break
    for key, lo in est.items():
        if lo + dag.task(key[0]).wcet > lft[key]:
            return None
    return est, lft


# -- core assignments and per-core orderings ------------------------------------


def _data_order(dag: DagSpec, table: InstanceTable, uses):
    """Direct must-precede edges (with producer-wcet lags) for fixed data uses,
    plus the transitive predecessor sets they imply."""
    edges: list[tuple[Key, Key, int]] = []
    direct: dict[Key, list[Key]] = {}
    for name in dag.topo_order():
        t = dag.task(name)
        for j in range(1, table.counts[name] + 1):
            key = (name, j)
            ins: list[tuple[Key, int]] = []
            if j > 1:
                ins.append(((name, j - 1), t.wcet))
            if t.kind is TaskType.SUBSCRIPTION:
                ins.append(((t.preds[0], j), dag.task(t.preds[0]).wcet))
            elif t.kind.is_fusion:
                ins.extend(((p, jp), dag.task(p).wcet) for p, jp in uses[key].items())
            direct[key] = [p for p, _ in ins]
            edges.extend((p, key, lag) for p, lag in ins)
    before: dict[Key, set[Key]] = {}
    for name in dag.topo_order():  # instance order lists producers first
        for j in range(1, table.counts[name] + 1):
            key = (name, j)
            acc: set[Key] = set()
            for p in direct[key]:
                acc.add(p)
                acc |= before[p]
            before[key] = acc
    return edges, before


def _times_ok(dag: DagSpec, est, lft, base_edges, combo):
    """Start-time intervals implied by data edges plus one ordering choice.

    Longest-path propagation in both directions; None for cyclic or
    window-violating leaves, killed without spending an LP on them.
    """
    edges = list(base_edges)
    for seq in combo:
        edges.extend((a, b, dag.task(a[0]).wcet) for a, b in zip(seq, seq[1:]))
    indeg = {k: 0 for k in est}
    out: dict[Key, list[tuple[Key, int]]] = {k: [] for k in est}
    for u, v, lag in edges:
        out[u].append((v, lag))
        indeg[v] += 1
    lo = dict(est)
    stack = [k for k, d in indeg.items() if d == 0]
    order: list[Key] = []
    while stack:
        k = stack.pop()
        order.append(k)
        for v, lag in out[k]:
            if lo[k] + lag > lo[v]:
                lo[v] = lo[k] + lag
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    if len(order) != len(est):
        return None  # a leftover node means the orders conflict
    hi = {k: lft[k] - dag.task(k[0]).wcet for k in est}
    for k in reversed(order):
        for v, lag in out[k]:
            if hi[v] - lag < hi[k]:
                hi[k] = hi[v] - lag
        if lo[k] > hi[k]:
            return None
    return lo, hi


def _assignments(free_keys: list[Key], cores: int, budget: _Budget):
    """Canonical (first-use-relabeled) core choices for the free instances."""

    def rec(i: int, used: int, acc: list[int]):
        budget.check()
        if i == len(free_keys):
            yield dict(zip(free_keys, acc))
            return
        for c in range(min(used + 1, cores)):
            yield from rec(i + 1, max(used, c + 1), acc + [c])

    yield from rec(0, 0, [])


def _core_sequences(keys: list[Key], dag: DagSpec, est, lft, budget: _Budget, before):
    """Interleavings of one core's instances that keep per-task index order and
    never put an instance ahead of a same-core transitive data predecessor."""
    core_set = set(keys)
    need = {k: before[k] & core_set for k in keys}
    chains: dict[str, list[Key]] = {}
    for k in keys:  # caller passes instance order, so chains stay index-sorted
        chains.setdefault(k[0], []).append(k)
    names = sorted(chains)
    out: list[list[Key]] = []

    def rec(ptr: dict[str, int], ecf: int, seq: list[Key], placed: set[Key]):
        budget.check()
        if len(seq) == len(keys):
            out.append(list(seq))
            return
        for name in names:
            i = ptr[name]
            if i >= len(chains[name]):
                continue
            key = chains[name][i]
            if not need[key] <= placed:
                continue
            start = max(ecf, est[key])
            if start + dag.task(name).wcet > lft[key]:
                continue
            ptr[name] += 1
            placed.add(key)
            rec(ptr, start + dag.task(name).wcet, seq + [key], placed)
            placed.discard(key)
            ptr[name] -= 1

    rec({n: 0 for n in names}, 0, [], set())
    return out


# -- metrics at fixed data use ---------------------------------------------------


def _provenance(dag: DagSpec, table: InstanceTable, uses) -> dict[Key, frozenset[Key]]:
    prov: dict[Key, frozenset[Key]] = {}
    for name in dag.topo_order():
        t = dag.task(name)
        for j in range(1, table.counts[name] + 1):
            if t.kind is TaskType.SENSOR:
                prov[(name, j)] = frozenset([(name, j)])
            elif t.kind is TaskType.SUBSCRIPTION:
                prov[(name, j)] = prov[(t.preds[0], j)]
            else:
                acc: set[Key] = set()
                for p, jp in uses[(name, j)].items():
                    acc |= prov[(p, jp)]
                prov[(name, j)] = frozenset(acc)
    return prov


def _metric_levels(mc: MetricConfig) -> list[list[tuple[str, float]]]:
    by: dict[int, list[tuple[str, float]]] = {}
    for term in mc.objective:
        if term.weight > 0:
            by.setdefault(term.priority, []).append((term.metric, float(term.weight)))
    return [by[p] for p in sorted(by)]


def _metric_terms(dag: DagSpec, table: InstanceTable, uses, mc: MetricConfig, col: dict[Key, int]):
    """Affine max-terms per requested (metric, key) once provenance is fixed."""
    sinks, pairs = metric_targets(dag, mc)
    wanted = {t.metric for t in mc.objective if t.weight > 0}
    prov = _provenance(dag, table, uses)
    rel = lambda s, js: dag.task(s).period * (js - 1)
    terms: dict[tuple[str, object], list[tuple[dict[int, float], float]]] = {}

    for sink in sinks:
        e = dag.task(sink).wcet
        ev = list(table.eval_indices(sink))
        if "ms" in wanted:
            terms[("ms", sink)] = [({col[(sink, j)]: 1.0}, float(e)) for j in ev]
        if "mrt" in wanted:
            terms[("mrt", sink)] = [
                ({col[(sink, j)]: 1.0}, float(e - min(rel(s, js) for s, js in prov[(sink, j - 1)])))
                for j in ev
                if j >= 2
            ]
        if "mtd" in wanted:
            terms[("mtd", sink)] = [
                (
                    {},
                    float(
                        max(rel(s, js) for s, js in prov[(sink, j)])
                        - min(rel(s, js) for s, js in prov[(sink, j)])
                    ),
                )
                for j in ev
            ]
        if "paoi" in wanted:
            rows = []
            for j in ev:
                for s, js in prov[(sink, j)]:
                    if js >= 2:
                        rows.append(({col[(s, js)]: 1.0, col[(s, js - 1)]: -1.0}, 0.0))
            terms[("paoi", sink)] = rows
    if "wcrt" in wanted:
        for sensor, sink in pairs:
            e = dag.task(sink).wcet
            rows = []
            for j in table.eval_indices(sink):
                for s, js in prov[(sink, j)]:
                    if s == sensor:
                        rows.append(({col[(sink, j)]: 1.0}, float(e - rel(s, js))))
            terms[("wcrt", (sensor, sink))] = rows
    return terms


# -- leaf optimization ------------------------------------------------------------


class _Leaf:
    """One lexicographic LP with lazy disjunctive-deadline branching."""

    def __init__(self, dag, table, instances, uses, est, lft, terms, levels, budget):
        self.budget = budget
        self.col = {key: i for i, key in enumerate(instances)}
        ncols = len(instances) + len(terms)
        self.vcol = {mk: len(instances) + i for i, mk in enumerate(sorted(terms, key=str))}
        self.bounds = [(0.0, None)] * ncols
        for key, i in self.col.items():
            self.bounds[i] = (float(est[key]), float(lft[key] - dag.task(key[0]).wcet))
        self.levels = [
            {
                self.vcol[mk]: sum(w for m2, w in level if m2 == mk[0])
                for mk in terms
                if any(m2 == mk[0] for m2, _ in level)
            }
            for level in levels
        ]
        self.terms = terms
        self.ncols = ncols

        ub: list[tuple[dict[int, float], float]] = []
        eq: list[tuple[dict[int, float], float]] = []
        for mk, rows in terms.items():  # epigraph: metric column covers every term
            for coefs, const in rows:
                ub.append(({**coefs, self.vcol[mk]: -1.0}, float(-const)))
        tab = table
        for name in dag.topo_order():
            t = dag.task(name)
            e, d = t.wcet, dag.deadline_of(name)
            for j in range(1, tab.counts[name] + 1):
                me = self.col[(name, j)]
                if j > 1:  # run-to-completion order within a task
                    ub.append(({self.col[(name, j - 1)]: 1.0, me: -1.0}, float(-e)))
                if t.kind is TaskType.SUBSCRIPTION:
                    p = t.preds[0]
                    ep = dag.task(p).wcet
                    pc = self.col[(p, j)]
                    ub.append(({pc: 1.0, me: -1.0}, float(-ep)))
                    ub.append(({me: 1.0, pc: -1.0}, float(ep + d - e)))
                elif t.kind.is_fusion:
                    for p, jp in uses[(name, j)].items():
                        ub.append(({self.col[(p, jp)]: 1.0, me: -1.0}, float(-dag.task(p).wcet)))
            c = tab.steady[name]
            for j in range(tab.window_counts[name][1] + 1, tab.counts[name] + 1 - c):
                eq.append(({self.col[(name, j + c)]: 1.0, self.col[(name, j)]: -1.0}, float(tab.hp)))
        self.base_ub, self.base_eq = ub, eq

        # deadline witnesses of event-triggered fusions (disjunctive: any used
        # input may be the newest one the deadline anchors to)
        self.witness: dict[Key, list[tuple[Key, int]]] = {}
        for name in dag.topo_order():
            t = dag.task(name)
            if not t.kind.is_fusion or t.kind is TaskType.T_FUSION:
                continue
            for j in range(1, tab.counts[name] + 1):
                if t.kind is TaskType.I_FUSION and j == 1:
                    anchors = [((p, 1), dag.task(p).wcet) for p in t.preds]
                else:
                    anchors = [((p, jp), dag.task(p).wcet) for p, jp in uses[(name, j)].items()]
                self.witness[(name, j)] = anchors
        self.dag = dag

    def _lex(self, extra_ub):
        rows = self.base_ub + extra_ub
        a_ub = np.zeros((len(rows), self.ncols)) if rows else None
        b_ub = np.zeros(len(rows)) if rows else None
        for i, (coefs, rhs) in enumerate(rows):
            for cidx, cv in coefs.items():
                a_ub[i, cidx] = cv
            b_ub[i] = rhs
        eq_rows = list(self.base_eq)
        x = None
        for level in self.levels or [{}]:
            self.budget.check()
            a_eq = np.zeros((len(eq_rows), self.ncols)) if eq_rows else None
            b_eq = np.zeros(len(eq_rows)) if eq_rows else None
            for i, (coefs, rhs) in enumerate(eq_rows):
                for cidx, cv in coefs.items():
                    a_eq[i, cidx] = cv
                b_eq[i] = rhs
            c = np.zeros(self.ncols)
            for cidx, w in level.items():
                c[cidx] = w
            res = linprog(
                c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                bounds=self.bounds, method="highs",
            )
            if res.status == 2:
                return None
            if res.status != 0:
                raise RuntimeError(f"oracle leaf LP failed: {res.message}")
            x = res.x
            val = res.fun
            val = float(round(val)) if abs(val - round(val)) <= 1e-6 else val
            eq_rows.append((dict(level), val))
        return x

    def bound(self, lo, hi):
        """Level-value lower bounds at interval-propagated starts: affine terms
        evaluated with lo on positive and hi on negative coefficients."""
        vals = {}
        for mk, rows in self.terms.items():
            best = 0.0
            for coefs, const in rows:
                v = const + sum(cv * (lo[i] if cv > 0 else hi[i]) for i, cv in coefs.items())
                if v > best:
                    best = v
            vals[mk] = best
        return tuple(
            _round9(sum(level.get(vc, 0.0) * vals[mk] for mk, vc in self.vcol.items()))
            for level in self.levels
        )

    def _violated(self, x):
        for key, anchors in self.witness.items():
            name, _ = key
            f = x[self.col[key]] + self.dag.task(name).wcet
            newest = max(x[self.col[a]] + ea for a, ea in anchors)
            if f > newest + self.dag.deadline_of(name) + 1e-6:
                return key
        return None

    def _tuple(self, x):
        vals = {
            mk: max((sum(cv * x[i] for i, cv in coefs.items()) + const for coefs, const in rows), default=0.0)
            for mk, rows in self.terms.items()
        }
        return tuple(
            _round9(sum(level.get(vc, 0.0) * vals[mk] for mk, vc in self.vcol.items()))
            for level in self.levels
        )

    def solve(self, extra_ub=None, depth: int = 0):
        extra_ub = extra_ub or []
        x = self._lex(extra_ub)
        if x is None:
            return None
        key = self._violated(x)
        if key is None:
            return self._tuple(x), x
        name = key[0]
        e, d = self.dag.task(name).wcet, self.dag.deadline_of(name)
        best = None
        for anchor, ea in self.witness[key]:
            row = ({self.col[key]: 1.0, self.col[anchor]: -1.0}, float(ea + d - e))
            r = self.solve(extra_ub + [row], depth + 1)
            if r is not None and (best is None or r[0] < best[0]):
                best = r
        return best


# -- top level --------------------------------------------------------------------


def brute_force_solve(
    dag: DagSpec,
    table: InstanceTable,
    metric_config: MetricConfig | None = None,
    grid: int = 1,
    *,
    max_instances: int = 10,
    max_delta: int = 60,
    time_budget: float | None = None,
) -> SolveOutcome:
    """True optimum by exhaustive search; only viable for tiny problems.

    ``grid`` names the tick resolution of the time model; the leaf optimizer
    is exact at any resolution, so values above 1 change nothing.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    total = sum(table.counts.values())
    if total > max_instances:
        raise CapError(f"{total} instances exceed the cap of {max_instances}")
    if table.delta > max_delta:
        raise CapError(f"window {table.delta} exceeds the cap of {max_delta} ticks")

    t0 = time.perf_counter()
    budget = _Budget(time_budget)
    mc = metric_config or dag.metrics
    levels = _metric_levels(mc)
    instances = [
        (name, j)
        for name in dag.topo_order()
        for j in range(1, table.counts[name] + 1)
    ]
    free = [key for key in instances if table.phase_of(*key) <= 2]

    best: tuple | None = None
    best_payload = None
    leaves = 0
    for uses in _iter_u_structures(dag, table, budget):
        b = _bounds_for(dag, table, uses)
        if b is None:
            continue
        est, lft = b
        col = {key: i for i, key in enumerate(instances)}
        terms = _metric_terms(dag, table, uses, mc, col)
        leaf = _Leaf(dag, table, instances, uses, est, lft, terms, levels, budget)
        data_edges, before = _data_order(dag, table, uses)
        pin_edges = [
            ((t.name, j), (t.name, j + table.steady[t.name]), table.hp)
            for t in dag.tasks
            for j in range(
                table.window_counts[t.name][1] + 1,
                table.counts[t.name] + 1 - table.steady[t.name],
            )
        ]
        base_edges = data_edges + pin_edges
        for assign in _assignments(free, dag.cores, budget):
            core_of = dict(assign)
            for key in instances:
                if key not in core_of:
                    core_of[key] = core_of[(key[0], key[1] - table.steady[key[0]])]
            per_core: dict[int, list[Key]] = {}
            for key in instances:
                per_core.setdefault(core_of[key], []).append(key)
            seq_sets = [
                _core_sequences(keys, dag, est, lft, budget, before)
                for keys in per_core.values()
            ]
            if any(not s for s in seq_sets):
                continue
            for combo in product(*seq_sets):
                leaves += 1
                iv = _times_ok(dag, est, lft, base_edges, combo)
                if iv is None:
                    continue
                if best is not None:
                    lo_c = [0.0] * len(instances)
                    hi_c = [0.0] * len(instances)
                    for key, i in leaf.col.items():
                        lo_c[i], hi_c[i] = iv[0][key], iv[1][key]
                    if not leaf.bound(lo_c, hi_c) < best:
                        continue  # interval bound already matches or beats it
                adj = []
                for seq in combo:
                    for a, bkey in zip(seq, seq[1:]):
                        adj.append(
                            ({leaf.col[a]: 1.0, leaf.col[bkey]: -1.0}, float(-dag.task(a[0]).wcet))
                        )
                r = leaf.solve(adj)
                if r is None:
                    continue
                if best is None or r[0] < best:
                    best = r[0]
                    best_payload = (dict(uses), dict(core_of), r[1])

    wall = time.perf_counter() - t0
    if best is None:
        return SolveOutcome(
            "infeasible", None, [], wall, backend="brute-force",
            message=f"exhausted {leaves} leaves without a feasible schedule",
        )
    uses, core_of, x = best_payload
    col = {key: i for i, key in enumerate(instances)}
    entries = [
        ScheduledInstance(
            name, j, table.phase_of(name, j), core_of[(name, j)],
            _near_int(x[col[(name, j)]]),
            _near_int(x[col[(name, j)]] + dag.task(name).wcet),
            dict(uses.get((name, j), {})),
        )
        for name, j in instances
    ]
    sched = Schedule(
        case=dag.name, hp=table.hp, k=table.k, delta=table.delta,
        cores=dag.cores, entries=entries,
    )
    out = SolveOutcome(
        "optimal", None, list(best), wall, backend="brute-force",
        message=f"searched {leaves} leaves",
    )
    out.schedule = sched
    return out
