"""Dinkelbach iteration for min TC/TV over a MilpModel."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..model import MilpModel
from .branch_and_bound import MilpOptions, MilpResult, MilpStatus, solve_milp


class DegenerateDenominatorError(ArithmeticError):
    """The delivered volume is zero, so the levelized cost is undefined.

    ``milp`` holds the parametric solve that delivered nothing.
    """

    def __init__(self, message: str, milp: MilpResult | None = None):
        super().__init__(message)
        self.milp = milp


@dataclass
class FractionalResult:
    status: MilpStatus
    x: np.ndarray | None
    lch2: float
    total_cost: float
    delivered: float
    iterations: int
    milp: MilpResult | None
    aux_values: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    nodes: int = 0
    wall_time: float = field(default=0.0, compare=False)


def solve_fractional(model: MilpModel, opts: MilpOptions = MilpOptions(),
                     tv: np.ndarray | None = None) -> FractionalResult:
    """Minimise c.x / tv.x by parametric MILPs ``min c.x - q tv.x``.

    Starts from q = 0. After each solve q is replaced by the ratio at the
    new incumbent; the loop stops once the parametric optimum
    F(q) = TC - q TV is within tolerance of zero. The previous incumbent
    (whose ratio is exactly q) is returned unless the last iterate has a
    strictly lower ratio. ``iterations`` counts ratio updates. When a
    solve stops at a limit its incumbent (if any, and if it improves the
    ratio) is kept and the limit status is returned.
    """
    start = time.perf_counter()
    tv = model.tv if tv is None else np.asarray(tv, dtype=float)
    if tv is None:
        raise ValueError("model has no delivered-volume expression")
    c = model.c
    q = 0.0
    best: MilpResult | None = None
    best_tc = best_tv = float("nan")
    iterations = 0
    aux: list[float] = []
    ratios: list[float] = []
    nodes = 0

    def result(status, milp):
        x = None if best is None else best.x
        return FractionalResult(status, x, q if best is not None else float("nan"), best_tc,
                                best_tv, iterations, milp, aux, ratios, nodes,
                                time.perf_counter() - start)

    for _ in range(opts.dinkelbach_max_iters + 1):
        milp = solve_milp(model, opts, c=c - q * tv)  # reported objective includes the offset
        nodes += milp.nodes
        if milp.status is not MilpStatus.OPTIMAL:
            if milp.status.is_limit and milp.has_incumbent:
                # keep a limited incumbent if it improves the ratio
                tc_val = float(c @ milp.x) + model.offset
                tv_val = float(tv @ milp.x)
                if tv_val > 0.0 and (best is None or tc_val / tv_val < q):
                    best, best_tc, best_tv = milp, tc_val, tv_val
                    q = tc_val / tv_val
                    ratios.append(q)
                    iterations += 1
            return result(milp.status, milp)
        x = milp.x
        tc_val = float(c @ x) + model.offset
        tv_val = float(tv @ x)
        F = tc_val - q * tv_val
        aux.append(F)
        if best is not None and abs(F) <= opts.dinkelbach_tolerance * max(1.0, tv_val):
            if tv_val > 0.0 and tc_val / tv_val < q:
                # the last iterate is marginally better; keep it
                best, best_tc, best_tv = milp, tc_val, tv_val
                q = tc_val / tv_val
                ratios.append(q)
                iterations += 1
            return result(MilpStatus.OPTIMAL, milp)
        if tv_val <= 0.0:
            raise DegenerateDenominatorError(
                "delivered volume is zero at the parametric optimum (q = %g)" % q, milp)
        if best is not None and iterations >= opts.dinkelbach_max_iters:
            break
        best, best_tc, best_tv = milp, tc_val, tv_val
        q = tc_val / tv_val
        ratios.append(q)
        iterations += 1
    return result(MilpStatus.ITERATION_LIMIT, best)
