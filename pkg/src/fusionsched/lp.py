"""Minimal mixed-integer model container: named vars, grouped rows, LP export."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


@dataclass
class Row:
    coeffs: dict[int, float]
    lb: float
    ub: float
    group: str
    name: str


@dataclass
class MipModel:
    name: str = "model"
    var_names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    obj_const: float = 0.0
    _by_name: dict[str, int] = field(default_factory=dict)

    # -- variables ---------------------------------------------------------
    def add_var(self, name: str, lb: float, ub: float, integer: bool = False) -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable {name}")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.integer.append(integer)
        self._by_name[name] = idx
        return idx

    def add_continuous(self, name: str, lb: float = 0.0, ub: float = np.inf) -> int:
        return self.add_var(name, lb, ub)

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True)

    def var(self, name: str) -> int:
        return self._by_name[name]

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    # -- rows ----------------------------------------------------------------
    def add_row(
        self,
        coeffs: dict[int, float],
        lb: float,
        ub: float,
        group: str,
        name: str | None = None,
    ) -> None:
        coeffs = {i: c for i, c in coeffs.items() if c != 0.0}
        self.rows.append(Row(coeffs, lb, ub, group, name or f"{group}.{len(self.rows)}"))

    def add_le(self, coeffs: dict[int, float], rhs: float, group: str, name: str | None = None) -> None:
        self.add_row(coeffs, -np.inf, rhs, group, name)

    def add_ge(self, coeffs: dict[int, float], rhs: float, group: str, name: str | None = None) -> None:
        self.add_row(coeffs, rhs, np.inf, group, name)

    def add_eq(self, coeffs: dict[int, float], rhs: float, group: str, name: str | None = None) -> None:
        self.add_row(coeffs, rhs, rhs, group, name)

    def group_sizes(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.group] = out.get(r.group, 0) + 1
        return out

    def set_objective(self, coeffs: dict[int, float], const: float = 0.0) -> None:
        self.objective = {i: c for i, c in coeffs.items() if c != 0.0}
        self.obj_const = const

    # -- conversion / checking ------------------------------------------------
    def to_arrays(self):
        n = self.num_vars
        m = len(self.rows)
        data, ri, ci = [], [], []
        for k, r in enumerate(self.rows):
            for i, c in r.coeffs.items():
                ri.append(k)
                ci.append(i)
                data.append(c)
        a = sparse.csr_array((data, (ri, ci)), shape=(m, n))
        row_lb = np.array([r.lb for r in self.rows])
        row_ub = np.array([r.ub for r in self.rows])
        c = np.zeros(n)
        for i, v in self.objective.items():
            c[i] = v
        return a, row_lb, row_ub, c

    def eval_objective(self, x: np.ndarray, coeffs: dict[int, float] | None = None) -> float:
        terms = self.objective if coeffs is None else coeffs
        const = self.obj_const if coeffs is None else 0.0
        return float(sum(c * x[i] for i, c in terms.items()) + const)

    def check_assignment(self, x: np.ndarray, tol: float = 1e-6) -> list[str]:
        """Re-check every bound, integrality and row by plain substitution."""
        bad: list[str] = []
        for i, name in enumerate(self.var_names):
            if x[i] < self.lb[i] - tol or x[i] > self.ub[i] + tol:
                bad.append(f"bound {name}={x[i]} outside [{self.lb[i]}, {self.ub[i]}]")
            if self.integer[i] and abs(x[i] - round(x[i])) > tol:
                bad.append(f"integrality {name}={x[i]}")
        for r in self.rows:
            v = sum(c * x[i] for i, c in r.coeffs.items())
            if v < r.lb - tol or v > r.ub + tol:
                bad.append(f"row {r.name} ({r.group}) value {v} outside [{r.lb}, {r.ub}]")
        return bad

    def clone(self) -> "MipModel":
        m = MipModel(name=self.name)
        m.var_names = list(self.var_names)
        m.lb = list(self.lb)
        m.ub = list(self.ub)
        m.integer = list(self.integer)
        m.rows = [Row(dict(r.coeffs), r.lb, r.ub, r.group, r.name) for r in self.rows]
        m.objective = dict(self.objective)
        m.obj_const = self.obj_const
        m._by_name = dict(self._by_name)
        return m

    # -- LP-format export ------------------------------------------------------
    def to_lp(self) -> str:
        safe = _safe_names(self.var_names)
        out = [f"\\ {self.name}", "Minimize"]
        terms = _expr(self.objective, safe) or "0 " + safe[0]
        out.append(f" obj: {terms}")
        out.append("Subject To")
        rownames = _safe_names([r.name for r in self.rows])
        for r, rn in zip(self.rows, rownames):
            expr = _expr(r.coeffs, safe) or "0 " + safe[0]
            if r.lb == r.ub:
                out.append(f" {rn}: {expr} = {_num(r.lb)}")
            else:
                if r.ub != np.inf:
                    out.append(f" {rn}: {expr} <= {_num(r.ub)}")
                if r.lb != -np.inf:
                    out.append(f" {rn}_l: {expr} >= {_num(r.lb)}")
        out.append("Bounds")
        for i, name in enumerate(safe):
            lo, hi = self.lb[i], self.ub[i]
            if self.integer[i] and lo == 0 and hi == 1:
                continue  # listed under Binary
            lo_s = "-inf" if lo == -np.inf else _num(lo)
            hi_s = "+inf" if hi == np.inf else _num(hi)
            out.append(f" {lo_s} <= {name} <= {hi_s}")
        gen = [safe[i] for i in range(self.num_vars) if self.integer[i] and not (self.lb[i] == 0 and self.ub[i] == 1)]
        binv = [safe[i] for i in range(self.num_vars) if self.integer[i] and self.lb[i] == 0 and self.ub[i] == 1]
        if gen:
            out.append("General")
            out.append(" " + " ".join(gen))
        if binv:
            out.append("Binary")
            out.append(" " + " ".join(binv))
        out.append("End")
        return "\n".join(out) + "\n"


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _expr(coeffs: dict[int, float], names: list[str]) -> str:
    parts = []
    for i in sorted(coeffs):
        c = coeffs[i]
        sign = "-" if c < 0 else ("+" if parts else "")
        mag = abs(c)
        coef = "" if mag == 1 else _num(mag) + " "
        parts.append(f"{sign} {coef}{names[i]}".strip())
    return " ".join(parts)


_LP_OK = re.compile(r"[^A-Za-z0-9_.]")


def _safe_names(names: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for i, n in enumerate(names):
        s = _LP_OK.sub("_", n)
        if not s or s[0].isdigit() or s[0] == ".":
            s = "v_" + s
        if s in seen:
            s = f"{s}__{i}"
        seen.add(s)
        out.append(s)
    return out
