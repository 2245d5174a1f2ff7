"""Bounded-variable revised primal simplex.

Every row gets a slack so the working system is ``[A I] (x, s) = b`` with
box bounds on all columns. Rows whose slack cannot absorb the starting
residual get an artificial column, driven to zero in phase 1. The basis
inverse is kept explicitly, updated by eta pivots and refactorised
periodically. Pricing is Dantzig's rule with a Harris two-pass ratio test,
switching to Bland's rule when the objective stalls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from ..model import GE, LE, MilpModel

log = logging.getLogger(__name__)

BASIC, AT_LOWER, AT_UPPER, FREE_ZERO, FIXED = 0, 1, 2, 3, 4

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
STALL_LIMIT = 60


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class NumericalError(RuntimeError):
    """Simplex could not continue because the basis became singular."""


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray = field(repr=False, default=None)
    dual_objective: float = float("nan")
    iterations: int = 0
    infeasible_rows: tuple[int, ...] = ()


def geometric_scaling(A: sp.spmatrix, passes: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors (powers of two) equilibrating ``|a_ij|`` geometrically."""
    coo = A.tocoo()
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    if coo.nnz == 0:
        return r, s
    rows, cols, vals = coo.row, coo.col, np.abs(coo.data)
    for _ in range(passes):
        v = vals * r[rows] * s[cols]
        rmax = np.zeros(m)
        rmin = np.full(m, np.inf)
        np.maximum.at(rmax, rows, v)
        np.minimum.at(rmin, rows, v)
        ok = rmax > 0
        r[ok] /= np.sqrt(rmax[ok] * rmin[ok])
        v = vals * r[rows] * s[cols]
        cmax = np.zeros(n)
        cmin = np.full(n, np.inf)
        np.maximum.at(cmax, cols, v)
        np.minimum.at(cmin, cols, v)
        ok = cmax > 0
        s[ok] /= np.sqrt(cmax[ok] * cmin[ok])
    # powers of two keep the scaling exact in binary floating point
    return np.exp2(np.round(np.log2(r))), np.exp2(np.round(np.log2(s)))


def solve_lp(model: MilpModel, c: np.ndarray | None = None, lb: np.ndarray | None = None,
             ub: np.ndarray | None = None, max_iter: int | None = None,
             scale: bool = True) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality ignored)."""
    return simplex(model.c if c is None else c, model.A, model.sense, model.rhs,
                   model.lb if lb is None else lb, model.ub if ub is None else ub,
                   max_iter=max_iter, scale=scale)


def simplex(c, A, sense, rhs, lb, ub, max_iter: int | None = None,
            scale: bool = True) -> LpSolution:
    c = np.asarray(c, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    A = sp.csr_matrix(A, dtype=float)
    m, n = A.shape
    if np.any(lb > ub):
        return _trivial_infeasible(n, m)

    if scale and m > 0:
        R, S = geometric_scaling(A)
    else:
        R, S = np.ones(m), np.ones(n)
    As = sp.diags(R) @ A @ sp.diags(S)
    bs = R * rhs
    cs = S * c
    sigma = float(np.max(np.abs(cs))) if np.any(cs) else 1.0
    sigma = 1.0 / sigma
    cs = cs * sigma
    los = lb / S
    his = ub / S

    solver = _Simplex(As.tocsc(), bs, cs, los, his, np.asarray(sense),
                      max_iter or max(5000, 40 * (m + n)))
    status = solver.run()

    xs = solver.x[:n]
    x = S * xs
    if status is LpStatus.INFEASIBLE:
        return LpSolution(status, x, float("nan"), np.zeros(m), np.zeros(n),
                          iterations=solver.iterations,
                          infeasible_rows=tuple(solver.infeasible_rows))
    y = R * solver.y / sigma
    d = c - A.T @ y
    objective = float(c @ x)
    if status is LpStatus.UNBOUNDED:
        objective = -np.inf
    dual_obj = float(rhs @ y)
    nb = solver.status[:n] != BASIC
    dual_obj += float(np.sum(np.where(nb & np.isfinite(x), d * x, 0.0)))
    return LpSolution(status, x, objective, y, d, dual_obj, solver.iterations)


def _trivial_infeasible(n, m) -> LpSolution:
    return LpSolution(LpStatus.INFEASIBLE, np.zeros(n), float("nan"), np.zeros(m), np.zeros(n))


class _Simplex:
    def __init__(self, A: sp.csc_matrix, b, c, lo, hi, sense, max_iter):
        m, n = A.shape
        self.m, self.n = m, n
        self.b = b
        self.max_iter = max_iter
        self.iterations = 0
        self.infeasible_rows: list[int] = []

        slo = np.zeros(m)
        shi = np.zeros(m)
        shi[sense == LE] = np.inf
        slo[sense == GE] = -np.inf
        self.lo = np.concatenate([lo, slo, np.zeros(m)])
        self.hi = np.concatenate([hi, shi, np.zeros(m)])

        # start every structural column at a finite bound (or zero if free)
        x = np.zeros(n + 2 * m)
        status = np.empty(n + 2 * m, dtype=np.int8)
        for j in range(n + m):
            l, h = self.lo[j], self.hi[j]
            if l == h:
                x[j], status[j] = l, FIXED
            elif np.isfinite(l):
                x[j], status[j] = l, AT_LOWER
            elif np.isfinite(h):
                x[j], status[j] = h, AT_UPPER
            else:
                x[j], status[j] = 0.0, FREE_ZERO
        status[n + m:] = FIXED

        resid = b - A @ x[:n]
        sign = np.ones(m)
        basis = np.empty(m, dtype=np.int64)
        self.art_used = np.zeros(m, dtype=bool)
        for i in range(m):
            r = resid[i]
            if slo[i] - FEAS_TOL <= r <= shi[i] + FEAS_TOL:
                basis[i] = n + i
                x[n + i] = r
                status[n + i] = BASIC
            else:
                clipped = min(max(r, slo[i]), shi[i])
                x[n + i] = clipped
                status[n + i] = FIXED if slo[i] == shi[i] else (AT_LOWER if clipped == slo[i] else AT_UPPER)
                sign[i] = 1.0 if r > clipped else -1.0
                basis[i] = n + m + i
                x[n + m + i] = abs(r - clipped)
                self.hi[n + m + i] = np.inf
                status[n + m + i] = BASIC
                self.art_used[i] = True

        eye = sp.identity(m, format="csc")
        self.M = sp.hstack([A, eye, sp.diags(sign, format="csc")], format="csc")
        self.MT = self.M.T.tocsr()
        self.x = x
        self.status = status
        self.basis = basis
        self.c_real = np.concatenate([c, np.zeros(2 * m)])
        self.Binv = np.diag(1.0 / np.where(basis >= n + m, sign, 1.0))
        self.updates = 0
        self.y = np.zeros(m)

    # -- linear algebra ---------------------------------------------------
    def _column(self, j):
        lo, hi = self.M.indptr[j], self.M.indptr[j + 1]
        return self.M.indices[lo:hi], self.M.data[lo:hi]

    def _refactor(self):
        B = self.M[:, self.basis].toarray()
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            cond = np.linalg.cond(B)
            raise NumericalError(f"basis matrix singular (condition estimate {cond:.3e}, "
                                 f"size {self.m})") from None
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.M @ xn)
        self.updates = 0

    # -- main loop --------------------------------------------------------
    def run(self) -> LpStatus:
        m, n = self.m, self.n
        if self.art_used.any():
            cost = np.zeros(n + 2 * m)
            cost[n + m:][self.art_used] = 1.0
            st = self._iterate(cost)
            if st is LpStatus.ITERATION_LIMIT:
                return st
            infeas = float(np.sum(self.x[n + m:]))
            scale = max(1.0, float(np.max(np.abs(self.b))) if m else 1.0)
            if infeas > 1e-8 * scale:
                self.infeasible_rows = [i for i in range(m)
                                        if self.x[n + m + i] > 1e-8 * scale]
                return LpStatus.INFEASIBLE
            art = np.arange(n + m, n + 2 * m)
            self.hi[art] = 0.0
            nonbasic = self.status[art] != BASIC
            self.status[art[nonbasic]] = FIXED
            self.x[art[nonbasic]] = 0.0
        return self._iterate(self.c_real)

    def _iterate(self, cost) -> LpStatus:
        best = np.inf
        stall = 0
        bland = False
        verified = False
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if self.updates >= REFACTOR_EVERY:
                self._refactor()
            cb = cost[self.basis]
            live = np.flatnonzero(cb)
            y = cb[live] @ self.Binv[live]
            self.y = y
            d = cost - self.MT @ y
            st = self.status
            elig_up = ((st == AT_LOWER) | (st == FREE_ZERO)) & (d < -OPT_TOL)
            elig_dn = ((st == AT_UPPER) | (st == FREE_ZERO)) & (d > OPT_TOL)
            elig = elig_up | elig_dn
            if not elig.any():
                if self.updates and not verified:
                    self._refactor()
                    verified = True
                    continue
                return LpStatus.OPTIMAL
            verified = False
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            direction = 1.0 if elig_up[q] else -1.0

            rows, vals = self._column(q)
            alpha = self.Binv[:, rows] @ vals
            delta = -direction * alpha
            r, theta = self._ratio_test(q, delta, bland)
            if r is None and not np.isfinite(theta):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            self.x[q] += direction * theta
            self.x[self.basis] += theta * delta
            if r is None:
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
            else:
                pivot = alpha[r]
                p = self.basis[r]
                hit_lower = delta[r] < 0
                self.x[p] = self.lo[p] if hit_lower else self.hi[p]
                if self.lo[p] == self.hi[p]:
                    self.status[p] = FIXED
                else:
                    self.status[p] = AT_LOWER if hit_lower else AT_UPPER
                self.basis[r] = q
                self.status[q] = BASIC
                row = self.Binv[r] / pivot
                touched = np.flatnonzero(alpha)
                self.Binv[touched] -= np.outer(alpha[touched], row)
                self.Binv[r] = row
                self.updates += 1

            obj = float(cost @ self.x)
            if obj < best - 1e-12 * max(1.0, abs(best) if np.isfinite(best) else 1.0):
                best = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True

    def _ratio_test(self, q, delta, bland):
        xb = self.x[self.basis]
        lb = self.lo[self.basis]
        ub = self.hi[self.basis]
        span = self.hi[q] - self.lo[q]
        dec = delta < -PIVOT_TOL
        inc = delta > PIVOT_TOL
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = np.full(self.m, np.inf)
            exact[dec] = (xb[dec] - lb[dec]) / -delta[dec]
            exact[inc] = (ub[inc] - xb[inc]) / delta[inc]
            exact = np.maximum(exact, 0.0)
            if bland:
                theta_min = float(exact.min()) if self.m else np.inf
                if span <= theta_min:
                    return None, span
                if not np.isfinite(theta_min):
                    return None, np.inf
                ties = np.flatnonzero(exact <= theta_min + 1e-12 * max(1.0, theta_min))
                r = int(ties[np.argmin(self.basis[ties])])
                return r, theta_min
            relaxed = np.full(self.m, np.inf)
            relaxed[dec] = (xb[dec] - lb[dec] + FEAS_TOL) / -delta[dec]
            relaxed[inc] = (ub[inc] - xb[inc] + FEAS_TOL) / delta[inc]
        # a basic value that drifted past its bound must not make the step negative
        theta_max = max(float(relaxed.min()), 0.0) if self.m else np.inf
        if span <= theta_max:
            return None, span
        if not np.isfinite(theta_max):
            return None, np.inf
        cand = np.flatnonzero(exact <= theta_max)
        r = int(cand[np.argmax(np.abs(delta[cand]))])
        return r, float(exact[r])
