"""Mixed-integer formulation of static non-preemptive fusion-graph scheduling.

Decision variables per task instance: start/finish times, core assignment,
pairwise ordering, and per-fusion data-use selections linking each fusion
instance to the producer instances it reads. Sensor provenance products chain
data-use selections backwards so end-to-end metrics can be written as linear
epigraph rows over the same model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .expansion import InstanceTable, build_instance_table, time_windows, used_index_bounds
from .graph import DagSpec, TaskType, compute_producers, ProducerMap
from .lp import MipModel

Key = tuple[str, int]  # (task, index)


@dataclass
class VarSet:
    s: dict[Key, int] = field(default_factory=dict)
    f: dict[Key, int] = field(default_factory=dict)
    y: dict[tuple[str, int, int], int] = field(default_factory=dict)
    z: dict[tuple[Key, Key], int] = field(default_factory=dict)  # 1 = first before second
    u: dict[tuple[Key, Key], int] = field(default_factory=dict)  # (fusion inst, pred inst)
    big_u: dict[tuple[Key, Key], int] = field(default_factory=dict)  # (fusion inst, sensor inst)
    w: dict[tuple[Key, Key, Key], int] = field(default_factory=dict)
    g: dict[tuple[Key, str], int] = field(default_factory=dict)  # used-finish per in-edge
    theta: dict[tuple[Key, str], int] = field(default_factory=dict)  # deadline witness edge
    ots: dict[Key, int] = field(default_factory=dict)
    nts: dict[Key, int] = field(default_factory=dict)
    metric: dict[tuple[str, object], int] = field(default_factory=dict)


@dataclass
class IlpModel:
    dag: DagSpec
    table: InstanceTable
    model: MipModel
    vars: VarSet
    big_m: float
    producers: ProducerMap
    est: dict[Key, int]
    lft: dict[Key, int]
    u_cands: dict[tuple[str, int, str], list[int]]
    prov_cands: dict[Key, list[Key]]
    levels: list[dict[int, float]] = field(default_factory=list)
    metric_keys: list[tuple[str, object]] = field(default_factory=list)
    infeasible_reasons: list[str] = field(default_factory=list)
    m_scale: float = 1.0

    def tight_m(self, gap: float) -> float:
        """Smallest safe deactivation slack for one indicator row, inflated by
        the audit scale so M-insensitivity stays checkable."""
        return max(1.0, float(gap)) * self.m_scale

    def group_sizes(self) -> dict[str, int]:
        return self.model.group_sizes()

    def mark_infeasible(self, reason: str) -> None:
        # empty sum >= 1 can never hold; keeps the model well-formed
        self.infeasible_reasons.append(reason)
        self.model.add_ge({}, 1.0, "timer", f"infeasible.{len(self.infeasible_reasons)}")


def _instances(table: InstanceTable) -> list[Key]:
    order = table.dag.topo_order()
    pos = {n: i for i, n in enumerate(order)}
    return sorted(((i.task, i.index) for i in table.instances), key=lambda k: (pos[k[0]], k[1]))


def sensor_ancestors(dag: DagSpec, producers: ProducerMap, task: str) -> tuple[str, ...]:
    """Sensors whose data can reach the given task through producer edges."""
    t = dag.task(task)
    if t.kind is TaskType.SENSOR:
        return (task,)
    if t.kind is TaskType.SUBSCRIPTION:
        return sensor_ancestors(dag, producers, producers.producer_of[task])
    out: list[str] = []
    for p in producers.pred_producers[task]:
        for s in sensor_ancestors(dag, producers, p):
            if s not in out:
                out.append(s)
    return tuple(out)


def build_ilp(
    dag: DagSpec,
    k: int = 3,
    *,
    table: InstanceTable | None = None,
    pin_tasks: bool = False,
    big_m_scale: float = 1.0,
) -> IlpModel:
    """Assemble the full model; constraint groups stay queryable by name."""
    if table is None:
        table = build_instance_table(dag, k)
    est, lft = time_windows(table)
    horizon = max(lft.values()) if lft else table.delta
    big_m = float(max(horizon, table.delta) + 1) * big_m_scale
    producers = compute_producers(dag)

    ilp = IlpModel(
        dag=dag,
        table=table,
        model=MipModel(name=dag.name or "fusion-graph"),
        vars=VarSet(),
        big_m=big_m,
        producers=producers,
        est=est,
        lft=lft,
        u_cands={},
        prov_cands={},
        m_scale=big_m_scale,
    )
    _add_instance_vars(ilp)
    build_core_constraints(ilp, pin_tasks=pin_tasks)
    build_trigger_constraints(ilp)
    build_fusion_constraints(ilp)
    build_provenance_constraints(ilp)
    build_metric_constraints(ilp)
    build_hp_copy_constraints(ilp)
    _add_symmetry_rows(ilp, pin_tasks=pin_tasks)
    build_objective(ilp)
    return ilp


def _add_symmetry_rows(ilp: IlpModel, pin_tasks: bool = False) -> None:
    """Order the starts of fully interchangeable tasks.

    Tasks with the same type, timing, predecessors, and successor set can be
    relabeled wholesale without changing feasibility or any objective term, so
    pinning s[a,1] <= s[b,1] within a group prunes the permutation space.
    Tasks named in a response-time pair are not interchangeable and stay out.

    When additionally (a) no group member's index-j window can overlap any
    member's index-j+1 execution and (b) every consumer instance reads every
    member at one forced, member-independent index, a single index-j slot swap
    (start and core) between two members is feasibility- and metric-preserving:
    consumers take the max over both finishes, which a swap leaves unchanged,
    and release-based terms see identical periods. Repeated swaps sort every
    index independently, so the group gets s[a,j] <= s[b,j] for all free j.
    """
    dag = ilp.dag
    _, pairs = metric_targets(dag)
    referenced = {name for pair in pairs for name in pair}
    cores = dag.cores
    core_pin = _instances(ilp.table)[0][0] if cores > 1 else None
    groups: dict[tuple, list[str]] = {}
    for t in dag.tasks:
        if t.name in referenced:
            continue
        sig = (
            t.kind,
            t.period,
            t.wcet,
            dag.deadline_of(t.name),
            tuple(sorted(t.preds)),
            tuple(sorted(dag.succs(t.name))),
        )
        groups.setdefault(sig, []).append(t.name)

    def slots_swappable(names: list[str]) -> bool:
        if core_pin in names or pin_tasks:
            return False  # a swap could move a core pin
        free_n = ilp.table.window_counts[names[0]][min(2, ilp.table.k)]
        n = ilp.table.counts[names[0]]
        for j in range(1, free_n + 1):
            if len({ilp.est[(x, j)] for x in names}) > 1:
                return False  # unequal windows: a swapped slot may be illegal
            if len({ilp.lft[(x, j)] for x in names}) > 1:
                return False
            if j < n and max(ilp.lft[(x, j)] for x in names) > min(
                ilp.est[(x, j + 1)] for x in names
            ):
                return False  # a swapped slot could break someone's chain order
        for c in dag.tasks:
            if not any(x in c.preds for x in names):
                continue
            for i in range(1, ilp.table.counts[c.name] + 1):
                cands = {tuple(ilp.u_cands.get((c.name, i, x), ())) for x in names}
                if len(cands) != 1 or len(next(iter(cands))) != 1:
                    return False  # consumers must read all members alike
        return True

    for names in groups.values():
        deep = len(names) > 1 and slots_swappable(names)
        free_n = ilp.table.window_counts[names[0]][min(2, ilp.table.k)] if deep else 1
        for a, b in zip(names, names[1:]):
            for j in range(1, free_n + 1):
                ilp.model.add_le(
                    {ilp.vars.s[(a, j)]: 1.0, ilp.vars.s[(b, j)]: -1.0},
                    0.0,
                    "symmetry",
                    f"sym.{a}.{b}.{j}",
                )


def _add_instance_vars(ilp: IlpModel) -> None:
    m, v = ilp.model, ilp.vars
    for key in _instances(ilp.table):
        task, j = key
        e = ilp.dag.task(task).wcet
        lo, hi = ilp.est[key], ilp.lft[key]
        if lo + e > hi:
            ilp.mark_infeasible(f"{task}#{j}: window [{lo},{hi}] too small for wcet {e}")
            hi = lo + e
        v.s[key] = m.add_continuous(f"s__{task}__{j}", lo, hi - e)
        v.f[key] = m.add_continuous(f"f__{task}__{j}", lo + e, hi)
        m.add_eq({v.f[key]: 1.0, v.s[key]: -1.0}, e, "assignment", f"fin.{task}.{j}")


def _forced_before(ilp: IlpModel) -> dict[Key, set[Key]]:
    """Transitive instance-level precedence: serial order, subscription
    same-index triggering, and each fusion edge's earliest usable input.
    Comparable pairs can never overlap, so they need no ordering binary."""
    table, dag = ilp.table, ilp.dag
    keys = _instances(table)
    succs: dict[Key, list[Key]] = {k: [] for k in keys}
    for t in dag.tasks:
        n = table.counts[t.name]
        for j in range(1, n + 1):
            if j > 1:
                succs[(t.name, j - 1)].append((t.name, j))
            if t.kind is TaskType.SUBSCRIPTION:
                succs[(t.preds[0], j)].append((t.name, j))
            elif t.kind.is_fusion:
                for p in t.preds:
                    lo, hi = used_index_bounds(table, t.name, p, j)
                    lo = max(1, lo)
                    if lo <= min(table.counts[p], hi):
                        succs[(p, lo)].append((t.name, j))
    after: dict[Key, set[Key]] = {k: set() for k in keys}
    for key in reversed(keys):  # keys are topo-sorted by task, then by index
        acc = after[key]
        for nxt in succs[key]:
            acc.add(nxt)
            acc |= after[nxt]
    return after


def build_core_constraints(ilp: IlpModel, pin_tasks: bool = False) -> None:
    """One core per instance; non-overlap of same-core instance pairs."""
    m, v, big_m = ilp.model, ilp.vars, ilp.big_m
    cores = ilp.dag.cores
    keys = _instances(ilp.table)
    if cores > 1:
        for key in keys:
            task, j = key
            for c in range(cores):
                v.y[(task, j, c)] = m.add_binary(f"y__{task}__{j}__c{c}")
            m.add_eq({v.y[(task, j, c)]: 1.0 for c in range(cores)}, 1.0, "assignment", f"one-core.{task}.{j}")
        first = keys[0]
        m.add_eq({v.y[(first[0], first[1], 0)]: 1.0}, 1.0, "assignment", "core-symmetry")
        if pin_tasks:
            for key in keys:
                task, j = key
                if j == 1:
                    continue
                for c in range(cores):
                    m.add_eq(
                        {v.y[(task, j, c)]: 1.0, v.y[(task, 1, c)]: -1.0},
                        0.0,
                        "assignment",
                        f"pin.{task}.{j}.c{c}",
                    )

    after = _forced_before(ilp)
    for a_i, a in enumerate(keys):
        for b in keys[a_i + 1 :]:
            if a[0] == b[0]:
                continue  # same task: serialized by chain order already
            # skip pairs whose time windows cannot overlap
            if ilp.lft[a] <= ilp.est[b] or ilp.lft[b] <= ilp.est[a]:
                continue
            if b in after[a] or a in after[b]:
                continue  # precedence rows already separate the pair
            z = m.add_binary(f"z__{a[0]}__{a[1]}__{b[0]}__{b[1]}")
            v.z[(a, b)] = z
            m_ab = ilp.tight_m(ilp.lft[a] - ilp.est[b])  # max of f_a - s_b
            m_ba = ilp.tight_m(ilp.lft[b] - ilp.est[a])
            if cores == 1:
                # z=1: a before b, z=0: b before a
                m.add_ge(
                    {v.s[b]: 1.0, v.f[a]: -1.0, z: -m_ab},
                    -m_ab, "overlap", f"ord.{a[0]}.{a[1]}.{b[0]}.{b[1]}",
                )
                m.add_ge(
                    {v.s[a]: 1.0, v.f[b]: -1.0, z: m_ba},
                    0.0, "overlap", f"ord.{b[0]}.{b[1]}.{a[0]}.{a[1]}",
                )
            else:
                for c in range(cores):
                    ya = v.y[(a[0], a[1], c)]
                    yb = v.y[(b[0], b[1], c)]
                    # a before b when z=1 and both on core c: s_b - f_a >= -M(3 - z - ya - yb)
                    m.add_ge(
                        {v.s[b]: 1.0, v.f[a]: -1.0, z: -m_ab, ya: -m_ab, yb: -m_ab},
                        -3.0 * m_ab,
                        "overlap", f"ordz.{a[0]}.{a[1]}.{b[0]}.{b[1]}.c{c}",
                    )
                    # b before a when z=0 and both on core c: s_a - f_b >= -M(2 + z - ya - yb)
                    m.add_ge(
                        {v.s[a]: 1.0, v.f[b]: -1.0, z: m_ba, ya: -m_ba, yb: -m_ba},
                        -2.0 * m_ba,
                        "overlap", f"ordnz.{a[0]}.{a[1]}.{b[0]}.{b[1]}.c{c}",
                    )


def build_trigger_constraints(ilp: IlpModel) -> None:
    """Releases, same-task instance order, subscription triggering, and the
    deadline rows that need no data-use witnesses."""
    m, v = ilp.model, ilp.vars
    dag, table = ilp.dag, ilp.table
    for t in dag.tasks:
        d = dag.deadline_of(t.name)
        n = table.counts[t.name]
        for j in range(1, n + 1):
            key = (t.name, j)
            if j > 1:
                m.add_ge(
                    {v.s[key]: 1.0, v.f[(t.name, j - 1)]: -1.0},
                    0.0, "timer", f"serial.{t.name}.{j}",
                )
            if t.kind.is_timer:
                r = table.release_of(t.name, j)
                m.add_ge({v.s[key]: 1.0}, float(r), "timer", f"rel.{t.name}.{j}")
                m.add_le({v.f[key]: 1.0}, float(r + d), "deadline", f"dl.{t.name}.{j}")
            elif t.kind is TaskType.SUBSCRIPTION:
                p = t.preds[0]
                m.add_ge(
                    {v.s[key]: 1.0, v.f[(p, j)]: -1.0},
                    0.0, "subscription", f"sub.{t.name}.{j}",
                )
                m.add_le(
                    {v.f[key]: 1.0, v.f[(p, j)]: -1.0},
                    float(d), "deadline", f"dl.{t.name}.{j}",
                )


def build_fusion_constraints(ilp: IlpModel) -> None:
    """Data-use selection per fusion instance and in-edge, with start gating,
    exactly-one use, index monotonicity, wait-for-all uniqueness, immediate
    freshness, and witness-based deadline rows for event fusions."""
    m, v, big_m = ilp.model, ilp.vars, ilp.big_m
    dag, table = ilp.dag, ilp.table
    for t in dag.tasks:
        if not t.kind.is_fusion:
            continue
        name, d = t.name, dag.deadline_of(t.name)
        n = table.counts[name]
        for j in range(1, n + 1):
            key = (name, j)
            lst = ilp.lft[key] - t.wcet
            for p in t.preds:
                e_p = dag.task(p).wcet
                lo, hi = used_index_bounds(table, name, p, j)
                cands = [
                    jp
                    for jp in range(max(1, lo), min(table.counts[p], hi) + 1)
                    if ilp.est[(p, jp)] + e_p <= lst
                ]
                ilp.u_cands[(name, j, p)] = cands
                if not cands:
                    ilp.mark_infeasible(f"{name}#{j}: no usable instance of {p}")
                    continue
                row = {}
                for jp in cands:
                    uv = m.add_binary(f"u__{name}__{j}__{p}__{jp}")
                    v.u[(key, (p, jp))] = uv
                    row[uv] = 1.0
                    m_g = ilp.tight_m(ilp.lft[(p, jp)] - ilp.est[key])
                    m.add_ge(
                        {v.s[key]: 1.0, v.f[(p, jp)]: -1.0, uv: -m_g},
                        -m_g, "fusion-start", f"gate.{name}.{j}.{p}.{jp}",
                    )
                m.add_eq(row, 1.0, "use-once", f"use.{name}.{j}.{p}")

        # per-edge index monotonicity across consecutive instances
        for p in t.preds:
            for j in range(1, n):
                a = ilp.u_cands.get((name, j, p), [])
                b = ilp.u_cands.get((name, j + 1, p), [])
                if not a or not b:
                    continue
                coeffs: dict[int, float] = {}
                for jp in b:
                    coeffs[v.u[((name, j + 1), (p, jp))]] = float(jp)
                for jp in a:
                    coeffs[v.u[((name, j), (p, jp))]] = coeffs.get(v.u[((name, j), (p, jp))], 0.0) - float(jp)
                strict = 1.0 if t.kind is TaskType.W_FUSION else 0.0
                m.add_ge(coeffs, strict, "monotone", f"mono.{name}.{j}.{p}")
            if t.kind is TaskType.W_FUSION:
                for jp in range(1, table.counts[p] + 1):
                    users = [
                        v.u[((name, j), (p, jp))]
                        for j in range(1, n + 1)
                        if jp in ilp.u_cands.get((name, j, p), [])
                    ]
                    if len(users) > 1:
                        m.add_le({uv: 1.0 for uv in users}, 1.0, "wfus-once", f"once.{name}.{p}.{jp}")

        if t.kind is TaskType.I_FUSION:
            # the sum of used indices over all in-edges strictly increases
            for j in range(1, n):
                coeffs = {}
                ok = True
                for p in t.preds:
                    a = ilp.u_cands.get((name, j, p), [])
                    b = ilp.u_cands.get((name, j + 1, p), [])
                    if not a or not b:
                        ok = False
                        break
                    for jp in b:
                        uv = v.u[((name, j + 1), (p, jp))]
                        coeffs[uv] = coeffs.get(uv, 0.0) + float(jp)
                    for jp in a:
                        uv = v.u[((name, j), (p, jp))]
                        coeffs[uv] = coeffs.get(uv, 0.0) - float(jp)
                if ok:
                    m.add_ge(coeffs, 1.0, "ifus-fresh", f"fresh.{name}.{j}")

        if t.kind is not TaskType.T_FUSION:
            _event_fusion_deadlines(ilp, t, d)


def _event_fusion_deadlines(ilp: IlpModel, t, d: int) -> None:
    """f <= (latest used input finish) + D, per instance, via per-edge
    used-finish trackers and a witness edge choice."""
    m, v, big_m = ilp.model, ilp.vars, ilp.big_m
    name = t.name
    n = ilp.table.counts[name]
    for j in range(1, n + 1):
        key = (name, j)
        if t.kind is TaskType.I_FUSION and j == 1:
            # released once the last first-round input lands
            if len(t.preds) == 1:
                m.add_le(
                    {v.f[key]: 1.0, v.f[(t.preds[0], 1)]: -1.0},
                    float(d), "deadline", f"dl.{name}.1",
                )
            else:
                sel = {}
                for p in t.preds:
                    th = m.add_binary(f"th__{name}__1__{p}")
                    v.theta[(key, p)] = th
                    sel[th] = 1.0
                    e_p = ilp.dag.task(p).wcet
                    m_th = ilp.tight_m(ilp.lft[key] - (ilp.est[(p, 1)] + e_p) - d)
                    m.add_le(
                        {v.f[key]: 1.0, v.f[(p, 1)]: -1.0, th: m_th},
                        float(d) + m_th, "deadline", f"dl.{name}.1.{p}",
                    )
                m.add_eq(sel, 1.0, "deadline", f"dlpick.{name}.1")
            continue
        edges = [p for p in t.preds if ilp.u_cands.get((name, j, p))]
        if not edges:
            continue
        gids = {}
        g_lb = {}
        for p in edges:
            e_p = ilp.dag.task(p).wcet
            cands = ilp.u_cands[(name, j, p)]
            lo = min(ilp.est[(p, jp)] + e_p for jp in cands)
            hi = max(ilp.lft[(p, jp)] for jp in cands)
            gv = m.add_continuous(f"g__{name}__{j}__{p}", float(lo), float(hi))
            v.g[(key, p)] = gv
            gids[p] = gv
            g_lb[p] = lo
            m_sp = ilp.tight_m(hi - lo)
            for jp in cands:
                uv = v.u[(key, (p, jp))]
                fp = v.f[(p, jp)]
                # g pinned to the finish of the used instance on this edge
                m.add_ge({gv: 1.0, fp: -1.0, uv: -m_sp}, -m_sp, "deadline", f"glo.{name}.{j}.{p}.{jp}")
                m.add_le({gv: 1.0, fp: -1.0, uv: m_sp}, m_sp, "deadline", f"ghi.{name}.{j}.{p}.{jp}")
        if len(edges) == 1:
            m.add_le(
                {v.f[key]: 1.0, gids[edges[0]]: -1.0},
                float(d), "deadline", f"dl.{name}.{j}",
            )
        else:
            sel = {}
            for p in edges:
                th = m.add_binary(f"th__{name}__{j}__{p}")
                v.theta[(key, p)] = th
                sel[th] = 1.0
                m_th = ilp.tight_m(ilp.lft[key] - g_lb[p] - d)
                m.add_le(
                    {v.f[key]: 1.0, gids[p]: -1.0, th: m_th},
                    float(d) + m_th, "deadline", f"dl.{name}.{j}.{p}",
                )
            m.add_eq(sel, 1.0, "deadline", f"dlpick.{name}.{j}")


def build_provenance_constraints(ilp: IlpModel) -> None:
    """Binary indicators linking each fusion instance to the sensor instances
    whose data it transitively consumed, via products of data-use choices."""
    m, v = ilp.model, ilp.vars
    dag, table = ilp.dag, ilp.table
    prod = ilp.producers

    for name in dag.topo_order():
        t = dag.task(name)
        if not t.kind.is_fusion:
            continue
        sensors = sensor_ancestors(dag, prod, name)
        e_i = t.wcet
        for j in range(1, table.counts[name] + 1):
            key = (name, j)
            lst = ilp.lft[key] - e_i
            cands = [
                (s, js)
                for s in sensors
                for js in range(1, table.counts[s] + 1)
                if ilp.est[(s, js)] + dag.task(s).wcet <= lst
            ]
            ilp.prov_cands[key] = cands
            terms: dict[Key, list[int]] = {c: [] for c in cands}
            for p_edge, p_prod in zip(t.preds, prod.pred_producers[name]):
                for jp in ilp.u_cands.get((name, j, p_edge), []):
                    uv = v.u[(key, (p_edge, jp))]
                    if dag.task(p_prod).kind is TaskType.SENSOR:
                        if (p_prod, jp) in terms:
                            terms[(p_prod, jp)].append(uv)
                        # else: pruned combination is unreachable; gate rows keep it so
                    else:
                        for sk in ilp.prov_cands.get((p_prod, jp), []):
                            if sk not in terms:
                                continue
                            up = v.big_u[((p_prod, jp), sk)]
                            wv = m.add_binary(
                                f"w__{name}__{j}__{p_edge}__{jp}__{sk[0]}__{sk[1]}"
                            )
                            v.w[(key, (p_edge, jp), sk)] = wv
                            m.add_le({wv: 1.0, uv: -1.0}, 0.0, "provenance", f"w1.{wv}")
                            m.add_le({wv: 1.0, up: -1.0}, 0.0, "provenance", f"w2.{wv}")
                            m.add_ge({wv: 1.0, uv: -1.0, up: -1.0}, -1.0, "provenance", f"w3.{wv}")
                            terms[sk].append(wv)
            for sk, tlist in terms.items():
                uv_big = m.add_binary(f"U__{name}__{j}__{sk[0]}__{sk[1]}")
                v.big_u[(key, sk)] = uv_big
                if not tlist:
                    m.add_eq({uv_big: 1.0}, 0.0, "provenance", f"U0.{name}.{j}.{sk[0]}.{sk[1]}")
                    continue
                coeffs = {uv_big: 1.0}
                for x in tlist:
                    coeffs[x] = coeffs.get(x, 0.0) - 1.0
                m.add_le(coeffs, 0.0, "provenance", f"Ule.{name}.{j}.{sk[0]}.{sk[1]}")
                coeffs = {uv_big: -float(len(tlist))}
                for x in tlist:
                    coeffs[x] = coeffs.get(x, 0.0) + 1.0
                m.add_le(coeffs, 0.0, "provenance", f"Uge.{name}.{j}.{sk[0]}.{sk[1]}")


def _prov_source(ilp: IlpModel, sink: str) -> tuple[str, str]:
    """('sensor', s) if the sink's data comes straight off one sensor chain,
    else ('fusion', f) naming the nearest fusion whose provenance applies."""
    p = ilp.producers.producer_of[sink]
    kind = ilp.dag.task(p).kind
    return ("sensor", p) if kind is TaskType.SENSOR else ("fusion", p)


def metric_targets(dag: DagSpec, mc=None) -> tuple[tuple[str, ...], tuple[tuple[str, str], ...]]:
    """Sinks and (sensor, sink) pairs the metric config resolves to."""
    mc = mc if mc is not None else dag.metrics
    sinks = mc.sinks if mc.sinks is not None else dag.sinks()
    if mc.wcrt_pairs is not None:
        pairs = mc.wcrt_pairs
    else:
        # default to the last sink paired with the first sensor that feeds it
        all_sinks = dag.sinks()
        feeders = set(sensor_ancestors(dag, compute_producers(dag), all_sinks[-1]))
        first = next((s for s in dag.sensors() if s in feeders), None)
        pairs = ((first, all_sinks[-1]),) if first else ()
    return tuple(sinks), tuple(pairs)


def build_metric_constraints(ilp: IlpModel) -> None:
    """Epigraph variables for each requested metric over warm-up-free instances."""
    m, v, big_m = ilp.model, ilp.vars, ilp.big_m
    dag, table = ilp.dag, ilp.table
    sinks, pairs = metric_targets(dag)
    wanted = {t.metric for t in dag.metrics.objective if t.weight > 0}

    need_ots: set[Key] = set()
    need_nts: set[Key] = set()
    rows: list[tuple] = []  # deferred until OTS/NTS vars exist

    for sink in sinks:
        kind, src = _prov_source(ilp, sink)
        ev = list(table.eval_indices(sink))
        if "ms" in wanted:
            mv = _metric_var(ilp, "ms", sink)
            for j in ev:
                m.add_ge({mv: 1.0, v.f[(sink, j)]: -1.0}, 0.0, "metric", f"ms.{sink}.{j}")
        if "mrt" in wanted:
            mv = _metric_var(ilp, "mrt", sink)
            for j in ev:
                if j < 2:
                    continue
                if kind == "sensor":
                    rel = table.release_of(src, j - 1)
                    m.add_ge({mv: 1.0, v.f[(sink, j)]: -1.0}, -float(rel), "metric", f"mrt.{sink}.{j}")
                else:
                    need_ots.add((src, j - 1))
                    rows.append(("mrt", mv, sink, src, j))
        if "mtd" in wanted and kind == "fusion":
            mv = _metric_var(ilp, "mtd", sink)
            for j in ev:
                need_ots.add((src, j))
                need_nts.add((src, j))
                rows.append(("mtd", mv, sink, src, j))
        elif "mtd" in wanted:
            _metric_var(ilp, "mtd", sink)  # single chain: zero by construction
        if "paoi" in wanted:
            mv = _metric_var(ilp, "paoi", sink)
            for j in ev:
                if kind == "sensor":
                    if j >= 2:
                        m.add_ge(
                            {mv: 1.0, v.s[(src, j)]: -1.0, v.s[(src, j - 1)]: 1.0},
                            0.0, "metric", f"paoi.{sink}.{j}",
                        )
                else:
                    for (s, js) in ilp.prov_cands.get((src, j), []):
                        if js < 2:
                            continue
                        uv = v.big_u[((src, j), (s, js))]
                        e_s = dag.task(s).wcet
                        m_g = ilp.tight_m(ilp.lft[(s, js)] - e_s - ilp.est[(s, js - 1)])
                        m.add_ge(
                            {mv: 1.0, v.s[(s, js)]: -1.0, v.s[(s, js - 1)]: 1.0, uv: -m_g},
                            -m_g, "metric", f"paoi.{sink}.{j}.{s}.{js}",
                        )

    for (sensor, sink) in pairs:
        if "wcrt" not in wanted:
            break
        if sensor not in sensor_ancestors(dag, ilp.producers, sink):
            raise ValueError(f"wcrt pair ({sensor}, {sink}): no data path between them")
        mv = _metric_var(ilp, "wcrt", (sensor, sink))
        kind, src = _prov_source(ilp, sink)
        period = dag.task(sensor).period
        for j in table.eval_indices(sink):
            if kind == "sensor":
                if src == sensor:
                    rel = table.release_of(sensor, j)
                    m.add_ge({mv: 1.0, v.f[(sink, j)]: -1.0}, -float(rel), "metric", f"wcrt.{sink}.{j}")
            else:
                for (s, js) in ilp.prov_cands.get((src, j), []):
                    if s != sensor:
                        continue
                    uv = v.big_u[((src, j), (s, js))]
                    rel = float(period * (js - 1))
                    m_w = ilp.tight_m(ilp.lft[(sink, j)] - rel)
                    m.add_ge(
                        {mv: 1.0, v.f[(sink, j)]: -1.0, uv: -m_w},
                        -m_w - rel, "metric", f"wcrt.{sink}.{j}.{js}",
                    )

    def _rels(key: Key) -> dict[Key, float]:
        return {
            (s, js): float(dag.task(s).period * (js - 1))
            for (s, js) in ilp.prov_cands.get(key, [])
        }

    for key in sorted(need_ots):
        src, j = key
        rels = _rels(key)
        lo, hi = (min(rels.values()), max(rels.values())) if rels else (0.0, big_m)
        ov = m.add_continuous(f"OTS__{src}__{j}", lo, hi)
        v.ots[key] = ov
        for (s, js), rel in rels.items():
            uv = v.big_u[(key, (s, js))]
            m_o = ilp.tight_m(hi - rel)
            m.add_le({ov: 1.0, uv: m_o}, rel + m_o, "metric", f"ots.{src}.{j}.{s}.{js}")
    for key in sorted(need_nts):
        src, j = key
        rels = _rels(key)
        lo, hi = (min(rels.values()), max(rels.values())) if rels else (0.0, big_m)
        nv = m.add_continuous(f"NTS__{src}__{j}", lo, hi)
        v.nts[key] = nv
        for (s, js), rel in rels.items():
            uv = v.big_u[(key, (s, js))]
            m_n = ilp.tight_m(rel - lo)
            m.add_ge({nv: 1.0, uv: -m_n}, rel - m_n, "metric", f"nts.{src}.{j}.{s}.{js}")

    for row in rows:
        if row[0] == "mrt":
            _, mv, sink, src, j = row
            m.add_ge(
                {mv: 1.0, v.f[(sink, j)]: -1.0, v.ots[(src, j - 1)]: 1.0},
                0.0, "metric", f"mrt.{sink}.{j}",
            )
        else:
            _, mv, sink, src, j = row
            m.add_ge(
                {mv: 1.0, v.nts[(src, j)]: -1.0, v.ots[(src, j)]: 1.0},
                0.0, "metric", f"mtd.{sink}.{j}",
            )


def _metric_var(ilp: IlpModel, metric: str, key) -> int:
    mk = (metric, key)
    if mk not in ilp.vars.metric:
        suffix = key if isinstance(key, str) else "__".join(key)
        ilp.vars.metric[mk] = ilp.model.add_continuous(f"V__{metric}__{suffix}", 0.0, ilp.big_m)
        ilp.metric_keys.append(mk)
    return ilp.vars.metric[mk]


def build_hp_copy_constraints(ilp: IlpModel) -> None:
    """Pin every post-warm-up hyperperiod to be a shifted copy of the previous
    one: starts shift by one hyperperiod, cores and data-use choices repeat."""
    m, v = ilp.model, ilp.vars
    dag, table = ilp.dag, ilp.table
    hp, k = table.hp, table.k
    for t in dag.tasks:
        name = t.name
        c = table.steady[name]
        wc = table.window_counts[name]
        for phase in range(2, k):
            for j in range(wc[phase - 1] + 1, wc[phase] + 1):
                jm = j + c
                m.add_eq(
                    {v.s[(name, jm)]: 1.0, v.s[(name, j)]: -1.0},
                    float(hp), "hp-copy", f"scopy.{name}.{j}",
                )
                for core in range(dag.cores):
                    if (name, j, core) in v.y:
                        m.add_eq(
                            {v.y[(name, jm, core)]: 1.0, v.y[(name, j, core)]: -1.0},
                            0.0, "hp-copy", f"ycopy.{name}.{j}.c{core}",
                        )
                if not t.kind.is_fusion:
                    continue
                for p in t.preds:
                    cp = table.steady[p]
                    np_phase = table.window_counts[p][phase]
                    src = ilp.u_cands.get((name, j, p), [])
                    dst = ilp.u_cands.get((name, jm, p), [])
                    for jp in src:
                        if jp > np_phase:
                            # copied rows may not read data from later phases
                            m.add_eq({v.u[((name, j), (p, jp))]: 1.0}, 0.0, "hp-copy", f"upin.{name}.{j}.{p}.{jp}")
                        elif jp + cp in dst:
                            m.add_eq(
                                {
                                    v.u[((name, jm), (p, jp + cp))]: 1.0,
                                    v.u[((name, j), (p, jp))]: -1.0,
                                },
                                0.0, "hp-copy", f"ucopy.{name}.{j}.{p}.{jp}",
                            )
                        else:
                            m.add_eq({v.u[((name, j), (p, jp))]: 1.0}, 0.0, "hp-copy", f"upin2.{name}.{j}.{p}.{jp}")
                    for jp in dst:
                        if jp <= cp or (jp - cp > np_phase) or (jp - cp not in src):
                            m.add_eq({v.u[((name, jm), (p, jp))]: 1.0}, 0.0, "hp-copy", f"upin3.{name}.{jm}.{p}.{jp}")


def build_objective(ilp: IlpModel) -> None:
    """Priority levels become a lexicographic ladder; inside a level metric
    variables combine by weight (summed over their sinks/pairs)."""
    terms = [t for t in ilp.dag.metrics.objective if t.weight > 0]
    by_prio: dict[int, dict[int, float]] = {}
    for term in terms:
        level = by_prio.setdefault(term.priority, {})
        for (metric, key), var in ilp.vars.metric.items():
            if metric == term.metric:
                level[var] = level.get(var, 0.0) + float(term.weight)
    ilp.levels = [by_prio[p] for p in sorted(by_prio)]
    if ilp.levels:
        ilp.model.set_objective(ilp.levels[0])
