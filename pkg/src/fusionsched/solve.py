"""Lexicographic MILP solving with an independent arithmetic re-check."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import backends
from .model import IlpModel, VarSet

OPTIMAL = "optimal"
FEASIBLE_TIMEOUT = "feasible-timeout"
INFEASIBLE = "infeasible"
ERROR = "error"


@dataclass
class SolveOutcome:
    status: str  # optimal | feasible-timeout | infeasible | error
    x: np.ndarray | None
    objective_levels: list[float]
    wall_time: float
    vars: VarSet | None = None
    backend: str = ""
    message: str = ""
    violations: list[str] = field(default_factory=list)
    schedule: object = None  # oracle route decodes its own schedule directly

    @property
    def objective(self) -> float | None:
        return self.objective_levels[0] if self.objective_levels else None


def _round_if_near_int(v: float, tol: float = 1e-5) -> float:
    return float(round(v)) if abs(v - round(v)) <= tol else v


def solve(
    ilp: IlpModel,
    *,
    time_limit: float | None = None,
    gap: float | None = None,
    log_path: str | None = None,
    backend: str | None = None,
    deterministic: bool = False,
) -> SolveOutcome:
    """Solve the model's priority levels in order, fixing each achieved value.

    The final assignment is re-checked by direct substitution into every
    constraint row; a claimed optimum that fails the re-check is downgraded to
    an error, never returned silently.

    The bundled backend is single-threaded and reproducible, so
    ``deterministic`` is accepted for interface stability and changes nothing.
    """
    del deterministic
    t0 = time.perf_counter()
    name = backends.pick_backend(backend)
    if ilp.infeasible_reasons:
        return SolveOutcome(
            INFEASIBLE, None, [], time.perf_counter() - t0, vars=ilp.vars,
            backend=name, message="; ".join(ilp.infeasible_reasons),
        )
    levels = ilp.levels or [{}]
    work = ilp.model.clone()
    status = OPTIMAL
    message = ""
    x = None
    for i, level in enumerate(levels):
        remaining = None
        if time_limit is not None:
            remaining = time_limit - (time.perf_counter() - t0)
            if remaining <= 0:
                status = FEASIBLE_TIMEOUT if x is not None else ERROR
                message = "time limit exhausted between priority levels"
                break
        work.set_objective(level)
        res = backends.run_backend(
            work, backend=name, time_limit=remaining, mip_gap=gap, log_path=log_path
        )
        if res.status == backends.OPTIMAL:
            x = res.x
            val = _round_if_near_int(work.eval_objective(x))
            work.add_eq(dict(level), val, "lexicographic", f"lexfix.{i}")
            continue
        if res.status == backends.FEASIBLE:
            x = res.x
            status = FEASIBLE_TIMEOUT
            message = res.message or "time limit reached with an incumbent"
        elif res.status == backends.INFEASIBLE:
            if i == 0:
                status = INFEASIBLE
            else:
                # can only be numerical: the fixed value was just achieved
                status = ERROR
                message = f"level {i} infeasible after fixing level {i - 1}"
        elif res.status == backends.UNKNOWN:
            status = ERROR
            message = res.message or "time limit reached with no incumbent"
        else:
            status = ERROR
            message = res.message or "backend failure"
        break

    outcome = SolveOutcome(
        status, x, [], time.perf_counter() - t0, vars=ilp.vars,
        backend=name, message=message,
    )
    if x is None:
        return outcome
    outcome.objective_levels = [
        _round_if_near_int(ilp.model.eval_objective(x, coeffs=level)) for level in levels
    ]
    bad = ilp.model.check_assignment(x)
    if bad:
        outcome.violations = bad
        if status == OPTIMAL:
            outcome.status = ERROR
            outcome.message = (
                f"assignment failed independent re-check ({len(bad)} rows); "
                "not trusting the backend"
            )
    return outcome
