"""Independent reference computations used by the tests.

Nothing here calls the package's formulation or solver code; the
enumeration oracle restates the direct-mode model from the scenario data
and solves each fixed integer pattern with scipy's HiGHS LP.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def haversine(lat1, lon1, lat2, lon2, radius=6371.0):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * radius * math.asin(math.sqrt(a))


def enumerate_direct_optimum(spec, fleet_slack: int = 2):
    """Minimum levelized cost of a direct-mode spec by brute force.

    Supports one pipeline mode plus exactly one vehicle mode whose lifespan
    exceeds the horizon (no scrapping). Every build pattern over all arcs and
    periods is tried; for each valid pattern every new-vehicle series with
    per-period purchases up to (requirement ceiling + ``fleet_slack``) is
    tried; the continuous part is a Charnes-Cooper LP.
    Returns (lch2, pattern, fleet, count_of_lps).
    """
    T = spec.horizon.periods
    G = spec.econ.construction_gap
    e = spec.econ
    pipe = next(m for m in spec.mode_specs if int(m.mode_id) == 1)
    veh = [m for m in spec.mode_specs if int(m.mode_id) != 1]
    assert len(veh) == 1 and veh[0].lifespan >= T
    truck = veh[0]
    I, J = len(spec.supply_nodes), len(spec.demand_nodes)
    L = np.array([[haversine(s.location.latitude, s.location.longitude,
                             d.location.latitude, d.location.longitude)
                   for d in spec.demand_nodes] for s in spec.supply_nodes])
    pv = np.array([1.0 / (1.0 + e.beta) ** t for t in range(T)])
    arcs = [(i, j) for i in range(I) for j in range(J)]
    A = len(arcs)

    # continuous variables: V[a, m, t] for m in {0: pipe, 1: truck}, then Spos, Sneg
    def vi(a, m, t):
        return (a * 2 + m) * T + t
    nV = A * 2 * T
    def sp(j, t):
        return nV + j * T + t
    def sn(j, t):
        return nV + J * T + j * T + t
    n = nV + 2 * J * T
    c = np.zeros(n)
    for a, (i, j) in enumerate(arcs):
        for t in range(T):
            c[vi(a, 0, t)] = pv[t] * e.loss_penalty * pipe.loss_rate * L[i, j] / pipe.capacity
            fuel = truck.fuel_price * 2 * L[i, j] / (truck.fuel_economy * truck.capacity)
            labour = truck.wage * (2 * L[i, j] / truck.speed + truck.load_time) / truck.capacity
            loss = e.loss_penalty * truck.loss_rate * L[i, j] / truck.capacity
            c[vi(a, 1, t)] = pv[t] * (fuel + labour + loss)
    for j in range(J):
        for t in range(T):
            c[sp(j, t)] = c[sn(j, t)] = pv[t] * e.imbalance_penalty
    need = np.zeros((A, T))
    for a, (i, j) in enumerate(arcs):
        trip = 2 * L[i, j] / truck.speed + truck.load_time
        need[a] = trip / (truck.availability_hours * truck.capacity * 365.0)

    # fixed rows that do not depend on the pattern (rhs multiplies s)
    ub_rows, ub_rhs = [], []
    eq_rows, eq_rhs = [], []
    for i, node in enumerate(spec.supply_nodes):
        for t in range(T):
            row = np.zeros(n)
            for a, (ii, j) in enumerate(arcs):
                if ii == i:
                    row[vi(a, 0, t)] = row[vi(a, 1, t)] = 1
            ub_rows.append(row)
            ub_rhs.append(node.capacity[t])
    for j, node in enumerate(spec.demand_nodes):
        for t in range(T):
            row = np.zeros(n)
            for a, (i, jj) in enumerate(arcs):
                if jj == j:
                    row[vi(a, 0, t)] = 1 - pipe.loss_rate * L[i, j] / pipe.capacity
                    row[vi(a, 1, t)] = 1 - truck.loss_rate * L[i, j] / truck.capacity
            row[sp(j, t)] = -1
            row[sn(j, t)] = 1
            eq_rows.append(row)
            eq_rhs.append(node.demand[t])
    tv_row = np.zeros(n)
    for a in range(A):
        for m in range(2):
            for t in range(T):
                tv_row[vi(a, m, t)] = 1

    peak = max(sum(s.capacity[t] for s in spec.supply_nodes) for t in range(T))
    ceiling = math.ceil(peak * need.max() - 1e-12)
    fleet_choices = list(itertools.product(range(ceiling + fleet_slack + 1), repeat=T))
    cap = np.array([e.base_flow_limit * e.base_length / L[i, j] for i, j in arcs])
    total_len = L.sum()

    # Charnes-Cooper: y = s x, minimise c.y + fixed s with every rhs moved into the s column
    pipe_rows = [(a, t) for a in range(A) for t in range(T)]
    m_ub = len(ub_rows) + len(pipe_rows) + T
    A_ub = np.zeros((m_ub, n + 1))
    A_ub[:len(ub_rows), :n] = np.array(ub_rows)
    A_ub[:len(ub_rows), n] = -np.array(ub_rhs)
    for q, (a, t) in enumerate(pipe_rows):
        A_ub[len(ub_rows) + q, vi(a, 0, t)] = 1.0
    off = len(ub_rows) + len(pipe_rows)
    for t in range(T):
        for a in range(A):
            A_ub[off + t, vi(a, 1, t)] = need[a, t]
    A_eq = np.zeros((len(eq_rows) + 1, n + 1))
    A_eq[:len(eq_rows), :n] = np.array(eq_rows)
    A_eq[:len(eq_rows), n] = -np.array(eq_rhs)
    A_eq[-1, :n] = tv_row
    b_eq = np.zeros(len(eq_rows) + 1)
    b_eq[-1] = 1.0
    b_ub = np.zeros(m_ub)
    cost = np.append(c, 0.0)

    best = (math.inf, None, None)
    count = 0
    for bits in itertools.product((0, 1), repeat=A * T):
        new = np.array(bits, dtype=float).reshape(A, T)
        if any(new[:, t].any() for t in range(T) if t + G > T - 1):
            continue
        if any(new[:, t].sum() > e.max_new_pipelines for t in range(T)):
            continue
        bh = np.zeros((A, T))
        for t in range(T):
            prev = bh[:, t - 1] if t > 0 else 0.0
            started = new[:, t - G] if t - G >= 0 else 0.0
            bh[:, t] = prev + started
        if bh.max() > 1:
            continue
        if any(np.any(bh[:, t + pipe.lifespan] + new[:, t] > 1)
               for t in range(T) if t + pipe.lifespan <= T - 1):
            continue
        pipe_fixed = 0.0
        for a, (i, j) in enumerate(arcs):
            for t in range(T):
                pipe_fixed += pv[t] * (new[a, t] * e.pipeline_capital * L[i, j]
                                       + bh[a, t] * e.pipeline_maintenance * L[i, j])
        for q, (a, t) in enumerate(pipe_rows):
            A_ub[len(ub_rows) + q, n] = -min(e.big_m * bh[a, t], cap[a])
        for nvnew in fleet_choices:
            nv = np.cumsum(nvnew)
            fixed = pipe_fixed
            for t in range(T):
                fixed += pv[t] * truck.capital_cost * nvnew[t]
                fixed += pv[t] * e.co2_penalty * truck.emission_factor * total_len * nv[t] \
                    / truck.fuel_economy
            A_ub[off:off + T, n] = -nv
            cost[n] = fixed
            res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                          bounds=(0, None), method="highs")
            count += 1
            if res.status == 0 and res.fun < best[0]:
                best = (float(res.fun), new.copy(), tuple(nvnew))
    return best[0], best[1], best[2], count


def vertex_enumeration_lp(c, A_ub, b_ub, bounds):
    """Optimum of min c.x, A_ub x <= b_ub, box bounds, by trying every vertex.

    Candidate vertices solve n linearly independent active constraints drawn
    from the rows and the finite bounds. Returns (objective, x) or
    (inf, None) when no feasible vertex exists.
    """
    c = np.asarray(c, dtype=float)
    n = len(c)
    G, h = [list(r) for r in A_ub], list(b_ub)
    for k, (lo, hi) in enumerate(bounds):
        if lo is not None and math.isfinite(lo):
            r = [0.0] * n
            r[k] = -1.0
            G.append(r)
            h.append(-lo)
        if hi is not None and math.isfinite(hi):
            r = [0.0] * n
            r[k] = 1.0
            G.append(r)
            h.append(hi)
    G, h = np.array(G, dtype=float), np.array(h, dtype=float)
    best, arg = math.inf, None
    for combo in itertools.combinations(range(len(G)), n):
        M = G[list(combo)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(combo)])
        if np.all(G @ x <= h + 1e-7):
            val = float(c @ x)
            if val < best - 1e-12:
                best, arg = val, x
    return best, arg


def best_partition(xy, w, K):
    """Minimum weighted within-cluster sum of squares over every labelling.

    Brute force over K**n labellings (only for small n). Returns
    (inertia, labels) with labels canonicalised so cluster ids appear in
    first-occurrence order.
    """
    xy = np.asarray(xy, dtype=float)
    w = np.asarray(w, dtype=float)
    n = len(xy)
    labels = np.array(list(itertools.product(range(K), repeat=n)), dtype=np.int8)
    total = np.zeros(len(labels))
    for k in range(K):
        mask = (labels == k).astype(float) * w
        mass = mask.sum(axis=1)
        sx = mask @ xy[:, 0]
        sy = mask @ xy[:, 1]
        sq = mask @ (xy ** 2).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            sse = np.where(mass > 0, sq - (sx ** 2 + sy ** 2) / mass, 0.0)
        total += sse
    best = int(np.argmin(total))
    lab = labels[best]
    order = {}
    canon = [order.setdefault(int(v), len(order)) for v in lab]
    return float(total[best]), canon


def read_free_mps(text: str) -> dict:
    """Minimal free-format MPS reader.

    Returns the objective vector and offset, a dense constraint matrix with
    row senses and right-hand sides, column bounds and the integer mask,
    all in the file's own row and column order.
    """
    section = None
    obj_row = None
    rows, senses = [], []
    cols: list[str] = []
    col_index: dict[str, int] = {}
    entries: list[tuple[str, str, float]] = []
    integer: dict[str, bool] = {}
    rhs: dict[str, float] = {}
    bounds: list[tuple[str, str, float | None]] = []
    in_int = False
    name = None
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME":
                name = head[1] if len(head) > 1 else ""
            continue
        f = raw.split()
        if section == "ROWS":
            kind, rname = f
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
            else:
                rows.append(rname)
                senses.append(kind)
        elif section == "COLUMNS":
            if len(f) == 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            cname = f[0]
            if cname not in col_index:
                col_index[cname] = len(cols)
                cols.append(cname)
                integer[cname] = in_int
            for r, v in zip(f[1::2], f[2::2]):
                entries.append((cname, r, float(v)))
        elif section == "RHS":
            for r, v in zip(f[1::2], f[2::2]):
                rhs[r] = float(v)
        elif section == "BOUNDS":
            kind, cname = f[0], f[2]
            bounds.append((kind, cname, float(f[3]) if len(f) > 3 else None))
    row_index = {r: i for i, r in enumerate(rows)}
    m, n = len(rows), len(cols)
    A = np.zeros((m, n))
    c = np.zeros(n)
    for cname, r, v in entries:
        if r == obj_row:
            c[col_index[cname]] = v
        else:
            A[row_index[r], col_index[cname]] = v
    b = np.array([rhs.get(r, 0.0) for r in rows])
    lb, ub = np.zeros(n), np.full(n, math.inf)
    for kind, cname, v in bounds:
        j = col_index[cname]
        if kind == "UP":
            ub[j] = v
        elif kind == "LO":
            lb[j] = v
        elif kind == "FX":
            lb[j] = ub[j] = v
        elif kind == "FR":
            lb[j], ub[j] = -math.inf, math.inf
        elif kind == "MI":
            lb[j] = -math.inf
        elif kind == "PL":
            ub[j] = math.inf
        elif kind == "BV":
            lb[j], ub[j] = 0.0, 1.0
        else:
            raise ValueError(f"unsupported bound type {kind}")
    return dict(name=name, rows=rows, senses=senses, cols=cols, A=A, c=c,
                offset=-rhs.get(obj_row, 0.0), b=b, lb=lb, ub=ub,
                integer=np.array([integer[k] for k in cols], dtype=bool))
