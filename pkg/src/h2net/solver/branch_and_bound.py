"""Branch-and-bound over the integer columns of a MilpModel."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..model import MilpModel
from .simplex import LpStatus, solve_lp


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"
    ITERATION_LIMIT = "iteration_limit"

    @property
    def is_limit(self) -> bool:
        return self in (MilpStatus.NODE_LIMIT, MilpStatus.TIME_LIMIT, MilpStatus.ITERATION_LIMIT)


@dataclass(frozen=True)
class MilpOptions:
    integer_tolerance: float = 1e-6
    relative_gap: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None
    dinkelbach_tolerance: float = 1e-6
    dinkelbach_max_iters: int = 50

    def __post_init__(self):
        for name in ("integer_tolerance", "relative_gap", "dinkelbach_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.node_limit is not None and self.node_limit < 0:
            raise ValueError("node_limit must be >= 0")
        if self.dinkelbach_max_iters < 1:
            raise ValueError("dinkelbach_max_iters must be >= 1")


@dataclass
class MilpResult:
    status: MilpStatus
    x: np.ndarray | None
    objective: float
    best_bound: float
    nodes: int
    wall_time: float = field(default=0.0, compare=False)
    lp_iterations: int = 0
    bound_history: list[float] = field(default_factory=list, repr=False)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def _gap_ok(bound: float, incumbent: float, rel: float) -> bool:
    return bound >= incumbent - rel * max(1.0, abs(incumbent))


def _branch_column(x: np.ndarray, integer: np.ndarray, tol: float) -> int | None:
    """Most fractional integer column, lowest index on ties."""
    xi = x[integer]
    frac = np.abs(xi - np.round(xi))
    if frac.size == 0 or frac.max() <= tol:
        return None
    # distance from 0.5, rounded so near-ties resolve by column index
    score = np.round(np.abs(xi - np.floor(xi) - 0.5), 12)
    score[frac <= tol] = np.inf
    cols = np.flatnonzero(integer)
    return int(cols[int(np.argmin(score))])


def solve_milp(model: MilpModel, opts: MilpOptions = MilpOptions(),
               c: np.ndarray | None = None) -> MilpResult:
    """Depth-first branch-and-bound, re-selecting the best bound on backtrack.

    Only ``model.branching`` columns are branched on; implied-integer columns
    are rounded when an incumbent is polished.

    ``c`` overrides the model objective (used by the fractional solver).
    """
    start = time.perf_counter()
    c = model.c if c is None else np.asarray(c, dtype=float)
    integer = model.integer
    branching = model.branching
    tol = opts.integer_tolerance
    counter = itertools.count()
    lp_iters = 0

    incumbent_x = None
    incumbent = math.inf
    nodes = 0
    history: list[float] = []

    def finish(status, bound):
        return MilpResult(status, incumbent_x, incumbent if incumbent_x is not None else math.inf,
                          bound, nodes, time.perf_counter() - start, lp_iters, history)

    root_lb = model.lb.copy()
    root_ub = model.ub.copy()
    root_lb[integer] = np.ceil(root_lb[integer] - tol)
    root_ub[integer] = np.floor(root_ub[integer] + tol)

    pool: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    current: tuple[float, np.ndarray, np.ndarray] | None = (-math.inf, root_lb, root_ub)
    limit_status = None
    root = True
    pruned_bound = math.inf

    while current is not None or pool:
        if current is None:
            bound, _, lb, ub = heapq.heappop(pool)
            current = (bound, lb, ub)
        parent_bound, lb, ub = current
        current = None

        if incumbent_x is not None and _gap_ok(parent_bound, incumbent, opts.relative_gap):
            pruned_bound = min(pruned_bound, parent_bound)
            continue
        history.append(min(parent_bound, pool[0][0]) if pool else parent_bound)

        if not root:
            if opts.node_limit is not None and nodes >= opts.node_limit:
                limit_status = MilpStatus.NODE_LIMIT
            elif opts.time_limit is not None and time.perf_counter() - start > opts.time_limit:
                limit_status = MilpStatus.TIME_LIMIT
            if limit_status is not None:
                heapq.heappush(pool, (parent_bound, next(counter), lb, ub))
                break
            nodes += 1

        lp = solve_lp(model, c=c, lb=lb, ub=ub)
        lp_iters += lp.iterations
        was_root, root = root, False
        if lp.status is LpStatus.INFEASIBLE:
            continue
        if lp.status is LpStatus.UNBOUNDED:
            if was_root:
                return finish(MilpStatus.UNBOUNDED, -math.inf)
            continue
        if lp.status is LpStatus.ITERATION_LIMIT:
            limit_status = MilpStatus.ITERATION_LIMIT
            break
        bound = max(lp.objective + model.offset, parent_bound)
        if incumbent_x is not None and _gap_ok(bound, incumbent, opts.relative_gap):
            pruned_bound = min(pruned_bound, bound)
            continue

        j = _branch_column(lp.x, branching, tol)
        if j is None:
            x, obj = _polish(model, c, lp.x, lb, ub, integer)
            obj += model.offset
            if x is not None and obj < incumbent:
                incumbent_x, incumbent = x, obj
            continue

        v = lp.x[j]
        down_ub = ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(v)
        down = (bound, lb, down_ub)
        up = (bound, up_lb, ub)
        if v - math.floor(v) > 0.5:
            current, other = up, down
        else:
            current, other = down, up
        heapq.heappush(pool, (other[0], next(counter), other[1], other[2]))

    if limit_status is not None:
        bound = min([p[0] for p in pool] + ([incumbent] if incumbent_x is not None else []))
        return finish(limit_status, bound)
    if incumbent_x is None:
        return finish(MilpStatus.INFEASIBLE, math.inf)
    return finish(MilpStatus.OPTIMAL, min(incumbent, pruned_bound))


def _polish(model, c, x, lb, ub, integer):
    """Snap integer columns and re-solve the continuous part."""
    fixed = np.round(x[integer])
    plb, pub = lb.copy(), ub.copy()
    plb[integer] = fixed
    pub[integer] = fixed
    lp = solve_lp(model, c=c, lb=plb, ub=pub)
    if lp.status is not LpStatus.OPTIMAL:
        snapped = x.copy()
        snapped[integer] = fixed
        return snapped, float(c @ snapped)
    out = lp.x.copy()
    out[integer] = fixed
    return out, float(c @ out)
