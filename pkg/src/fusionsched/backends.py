"""Solver backends behind one call signature; selected via FUSIONSCHED_BACKEND."""
from __future__ import annotations

import contextlib
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .lp import MipModel

BACKEND_ENV = "FUSIONSCHED_BACKEND"
DEFAULT_BACKEND = "scipy-highs"

OPTIMAL = "optimal"
FEASIBLE = "feasible"  # incumbent returned at a limit
UNKNOWN = "unknown"  # limit hit with no incumbent
INFEASIBLE = "infeasible"
ERROR = "error"


@dataclass
class BackendResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    mip_gap: float | None = None
    node_count: int | None = None
    runtime: float = 0.0
    message: str = ""
    extra: dict = field(default_factory=dict)


@contextlib.contextmanager
def _stdout_fd_to_file(path: str | None):
    """Route fd 1 into a file so native solver chatter lands in the log."""
    if path is None:
        yield
        return
    sys.stdout.flush()
    saved = os.dup(1)
    with open(path, "ab") as fh:
        os.dup2(fh.fileno(), 1)
        try:
            yield
        finally:
            sys.stdout.flush()
            os.dup2(saved, 1)
            os.close(saved)


def _solve_scipy_highs(
    model: MipModel,
    time_limit: float | None,
    mip_gap: float | None,
    log_path: str | None,
) -> BackendResult:
    a, row_lb, row_ub, c = model.to_arrays()
    integrality = np.array([1 if b else 0 for b in model.integer])
    bounds = optimize.Bounds(np.array(model.lb), np.array(model.ub))
    options: dict = {"disp": log_path is not None, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    if mip_gap is not None:
        options["mip_rel_gap"] = float(mip_gap)
    cons = optimize.LinearConstraint(a, row_lb, row_ub) if len(model.rows) else ()
    t0 = time.perf_counter()
    with _stdout_fd_to_file(log_path):
        res = optimize.milp(
            c,
            constraints=cons,
            integrality=integrality,
            bounds=bounds,
            options=options,
        )
    dt = time.perf_counter() - t0
    # scipy milp status: 0 optimal, 1 limit reached, 2 infeasible, 3 unbounded
    if res.status == 0:
        status = OPTIMAL
    elif res.status == 1:
        status = FEASIBLE if res.x is not None else UNKNOWN
    elif res.status == 2:
        status = INFEASIBLE
    else:
        status = ERROR
    obj = None
    if res.x is not None:
        obj = model.eval_objective(np.asarray(res.x))
    return BackendResult(
        status=status,
        x=None if res.x is None else np.asarray(res.x),
        objective=obj,
        mip_gap=getattr(res, "mip_gap", None),
        node_count=getattr(res, "mip_node_count", None),
        runtime=dt,
        message=str(res.message),
    )


BACKENDS = {
    "scipy-highs": _solve_scipy_highs,
    "scipy": _solve_scipy_highs,
}


def pick_backend(name: str | None = None) -> str:
    chosen = name or os.environ.get(BACKEND_ENV) or DEFAULT_BACKEND
    if chosen not in BACKENDS:
        raise ValueError(
            f"unknown backend {chosen!r}; available: {sorted(set(BACKENDS))}"
        )
    return chosen


def run_backend(
    model: MipModel,
    backend: str | None = None,
    time_limit: float | None = None,
    mip_gap: float | None = None,
    log_path: str | None = None,
) -> BackendResult:
    return BACKENDS[pick_backend(backend)](model, time_limit, mip_gap, log_path)
