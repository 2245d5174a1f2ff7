"""Compile a ScenarioSpec into a MilpModel and decode solutions back.

Direct mode moves hydrogen from supply node i to demand node j on any
transport method r. Hub mode routes it through hubs: supply to hub by
pipeline only, hub to demand on any method, and each demand node is served
only by its assigned hub.

Objective coefficients are grouped into eight named cost parts (see
``COST_PARTS``); the delivered volume is stored separately as ``model.tv`` so
the levelized ratio can be handled by the fractional solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import (CarbonCost, ModeId, PlanMode, ScenarioSpec, TransportModeSpec, TripTime,
                     ValidationError, present_value_factor, straight_line_distance)
from .model import EQ, GE, LE, MilpModel, ModelBuilder

COST_PARTS = ("C_HC", "C_VC", "C_FO", "C_LO", "C_HO", "C_HL", "C_CL", "C_SL")

DIRECT_FAMILIES = ("FlowV", "Spos", "Sneg", "BH", "BHnew", "NV", "NVnew", "NVscrap")
HUB_FAMILIES = ("FlowVik", "FlowVkj", "Spos", "Sneg", "BHik", "BHiknew", "BHkj", "BHkjnew",
                "NV", "NVnew", "NVscrap")


class SolutionIntegrityError(ValueError):
    """A decoded vector violates column bounds beyond tolerance."""


def distance_matrix(a_points, b_points) -> np.ndarray:
    return np.array([[straight_line_distance(a, b) for b in b_points] for a in a_points],
                    dtype=float).reshape(len(a_points), len(b_points))


def trip_hours(spec: TransportModeSpec, length: float, form: TripTime) -> float:
    if form is TripTime.TYPESET:
        return 2.0 * length / (spec.speed + spec.load_time)
    return 2.0 * length / spec.speed + spec.load_time


def vehicle_requirement_coef(spec: TransportModeSpec, length: float, form: TripTime) -> float:
    """Vehicles needed per kg/year carried on an arc of ``length`` km."""
    return trip_hours(spec, length, form) / (spec.availability_hours * spec.capacity * 365.0)


def _flow_cap(econ, length: float) -> float:
    if length <= 0.0:
        return math.inf
    return econ.base_flow_limit * econ.base_length / length


class _Compiler:
    """Shared pieces of the direct and hub builders."""

    def __init__(self, spec: ScenarioSpec, name: str):
        self.spec = spec
        self.T = spec.periods
        self.G = spec.econ.construction_gap
        self.econ = spec.econ
        self.pv = np.array([present_value_factor(spec.econ.beta, t) for t in range(self.T)])
        self.modes = spec.modes
        self.vmodes = spec.vehicle_modes
        self.pipe = spec.mode_spec(ModeId.PIPELINE)
        self.b = ModelBuilder(name)
        self.warnings: list[str] = []

    def vehicle_families(self):
        b, T = self.b, self.T
        R = len(self.vmodes)
        NV = b.add_family("NV", (R, T), ("r", "t"), integer=True, implied=True)
        NVnew = b.add_family("NVnew", (R, T), ("r", "t"), integer=True)
        NVscrap = b.add_family("NVscrap", (R, T), ("r", "t"), integer=True, implied=True)
        for q, r in enumerate(self.vmodes):
            ms = self.spec.mode_spec(r)
            for t in range(T):
                b.add_cost("C_VC", NVnew[q, t], self.pv[t] * ms.capital_cost)
            b.add_row([NV[q, 0], NVnew[q, 0]], [1.0, -1.0], EQ, 0.0, "fleet_init", (q,))
            for t in range(1, T):
                b.add_row([NV[q, t], NVnew[q, t], NV[q, t - 1], NVscrap[q, t]],
                          [1.0, -1.0, -1.0, 1.0], EQ, 0.0, "fleet_update", (q, t))
            for t in range(T):
                if t >= ms.lifespan:
                    b.add_row([NVscrap[q, t], NVnew[q, t - ms.lifespan]], [1.0, -1.0], EQ, 0.0,
                              "scrap_link", (q, t))
                else:
                    b.set_bounds(int(NVscrap[q, t]), ub=0.0)
        return NV, NVnew, NVscrap

    def slack_families(self):
        b = self.b
        J = len(self.spec.demand_nodes)
        Spos = b.add_family("Spos", (J, self.T), ("j", "t"))
        Sneg = b.add_family("Sneg", (J, self.T), ("j", "t"))
        for j in range(J):
            for t in range(self.T):
                b.add_cost("C_SL", Spos[j, t], self.pv[t] * self.econ.imbalance_penalty)
                b.add_cost("C_SL", Sneg[j, t], self.pv[t] * self.econ.imbalance_penalty)
        return Spos, Sneg

    def pipeline_arc(self, BH, BHnew, a: int, c: int, length: float, capital: float,
                     suffix: str, enabled: bool):
        """Existence dynamics, lifespan rows and cost terms for one pipeline arc."""
        b, T, G = self.b, self.T, self.G
        if not enabled:
            for t in range(T):
                b.set_bounds(int(BH[a, c, t]), ub=0.0)
                b.set_bounds(int(BHnew[a, c, t]), ub=0.0)
            return
        for t in range(T):
            b.add_cost("C_HC", BHnew[a, c, t], self.pv[t] * capital * length)
            b.add_cost("C_HO", BH[a, c, t], self.pv[t] * self.econ.pipeline_maintenance * length)
            if t + G > T - 1:
                b.set_bounds(int(BHnew[a, c, t]), ub=0.0)
        if G == 0:
            b.add_row([BH[a, c, 0], BHnew[a, c, 0]], [1.0, -1.0], EQ, 0.0,
                      "instant_build" + suffix, (a, c, 0))
            for t in range(1, T):
                b.add_row([BH[a, c, t], BH[a, c, t - 1], BHnew[a, c, t]], [1.0, -1.0, -1.0], EQ,
                          0.0, "instant_build" + suffix, (a, c, t))
        else:
            for t in range(min(G, T)):
                b.set_bounds(int(BH[a, c, t]), ub=0.0)  # nothing can be finished yet
            for s in range(1, T):
                if s < G:
                    b.add_row([BH[a, c, s], BH[a, c, s - 1]], [1.0, -1.0], EQ, 0.0,
                              "construction_delay" + suffix, (a, c, s))
                else:
                    b.add_row([BH[a, c, s], BH[a, c, s - 1], BHnew[a, c, s - G]],
                              [1.0, -1.0, -1.0], EQ, 0.0, "construction_update" + suffix,
                              (a, c, s))
        life = self.pipe.lifespan
        for t in range(T):
            if t + life <= T - 1:
                b.add_row([BH[a, c, t + life], BHnew[a, c, t]], [1.0, 1.0], LE, 1.0,
                          "lifespan" + suffix, (a, c, t))

    def flow_costs(self, col: int, r: ModeId, length: float, t: int):
        """Fuel, labour and loss costs of one kg/year on an arc."""
        b, ms = self.b, self.spec.mode_spec(r)
        pv = self.pv[t]
        if ms.is_vehicle:
            b.add_cost("C_FO", col, pv * ms.fuel_price * 2.0 * length / (ms.fuel_economy * ms.capacity))
            b.add_cost("C_LO", col, pv * ms.wage * (2.0 * length / ms.speed + ms.load_time)
                       / ms.capacity)
            if self.spec.options.carbon_cost is CarbonCost.FLOW_APPORTIONED:
                b.add_cost("C_CL", col, pv * self.econ.co2_penalty * ms.emission_factor * length
                           / (ms.capacity * ms.fuel_economy))
        b.add_cost("C_HL", col, pv * self.econ.loss_penalty * ms.loss_rate * length / ms.capacity)

    def delivered_fraction(self, r: ModeId, length: float) -> float:
        ms = self.spec.mode_spec(r)
        return 1.0 - ms.loss_rate * length / ms.capacity

    def fleet_rows(self, NV, arcs_by_mode, total_lengths):
        """Vehicle requirement, emission rows and the literal carbon cost.

        ``arcs_by_mode[q]`` lists (column, length) pairs of flows using vehicle
        mode q in each period; ``total_lengths[j]`` is the summed arc length
        into demand node j used by the emission rows.
        """
        b, T, econ = self.b, self.T, self.econ
        form = self.spec.options.trip_time
        for q, r in enumerate(self.vmodes):
            ms = self.spec.mode_spec(r)
            for t in range(T):
                cols = [NV[q, t]]
                vals = [1.0]
                for col_t, length in arcs_by_mode[q]:
                    cols.append(col_t[t])
                    vals.append(-vehicle_requirement_coef(ms, length, form))
                b.add_row(cols, vals, GE, 0.0, "vehicle_requirement", (q, t))
            if self.spec.options.carbon_cost is CarbonCost.LITERAL:
                all_length = float(sum(total_lengths))
                for t in range(T):
                    b.add_cost("C_CL", NV[q, t], self.pv[t] * econ.co2_penalty
                               * ms.emission_factor * all_length / ms.fuel_economy)
        for j, length in enumerate(total_lengths):
            for t in range(T):
                ceil = econ.ceiling(j, t)
                if math.isinf(ceil):
                    continue
                cols, vals = [], []
                for q, r in enumerate(self.vmodes):
                    ms = self.spec.mode_spec(r)
                    cols.append(NV[q, t])
                    vals.append(ms.emission_factor * length / ms.fuel_economy)
                b.add_row(cols, vals, LE, ceil, "emission", (j, t))

    def finish(self, tv_cols, extra_meta: dict) -> MilpModel:
        if self.pipe is not None and self.G > 0 and self.G > self.T - 1:
            self.warnings.append(
                f"construction gap {self.G} leaves no period in which a pipeline could be "
                f"completed within {self.T} periods; all pipeline builds are disabled")
        for part in COST_PARTS:
            self.b.cost_parts.setdefault(part, np.zeros(0))
        self.b.metadata.update(
            plan_mode=self.spec.mode.value,
            modes=[int(r) for r in self.modes],
            vehicle_modes=[int(r) for r in self.vmodes],
            periods=self.T,
            construction_gap=self.G,
            trip_time=self.spec.options.trip_time.value,
            carbon_cost=self.spec.options.carbon_cost.value,
            warnings=list(self.warnings),
            **extra_meta,
        )
        return self.b.build(tv_cols=tv_cols)


def build_mode1(spec: ScenarioSpec) -> MilpModel:
    """Direct supply-to-demand model."""
    if spec.mode is not PlanMode.DIRECT:
        raise ValidationError("build_mode1 needs a direct-mode scenario")
    if spec.hub_nodes or spec.hub_assignment:
        raise ValidationError("direct-mode scenario must not carry hub fields")
    comp = _Compiler(spec, spec.name or "direct")
    b, T, econ = comp.b, comp.T, comp.econ
    I, J, R = len(spec.supply_nodes), len(spec.demand_nodes), len(comp.modes)
    L = distance_matrix([n.location for n in spec.supply_nodes],
                        [n.location for n in spec.demand_nodes])

    V = b.add_family("FlowV", (I, J, R, T), ("i", "j", "r", "t"))
    Spos, Sneg = comp.slack_families()
    BH = b.add_family("BH", (I, J, T), ("i", "j", "t"), ub=1.0, integer=True, implied=True)
    BHnew = b.add_family("BHnew", (I, J, T), ("i", "j", "t"), ub=1.0, integer=True)
    NV, _, _ = comp.vehicle_families()
    p = comp.modes.index(ModeId.PIPELINE) if comp.pipe is not None else None

    for i in range(I):
        for j in range(J):
            for ri, r in enumerate(comp.modes):
                for t in range(T):
                    comp.flow_costs(V[i, j, ri, t], r, L[i, j], t)
            if p is not None:
                cap = _flow_cap(econ, L[i, j])
                for t in range(T):
                    if math.isfinite(cap):
                        b.set_bounds(int(V[i, j, p, t]), ub=cap)
                    b.add_row([V[i, j, p, t], BH[i, j, t]], [1.0, -econ.big_m], LE, 0.0,
                              "pipeline_use", (i, j, t))
            comp.pipeline_arc(BH, BHnew, i, j, L[i, j], econ.pipeline_capital, "",
                              enabled=p is not None)

    for i, node in enumerate(spec.supply_nodes):
        for t in range(T):
            b.add_row(V[i, :, :, t].ravel(), np.ones(J * R), LE, node.capacity[t], "supply", (i, t))
    for j, node in enumerate(spec.demand_nodes):
        for t in range(T):
            cols, vals = [], []
            for i in range(I):
                for ri, r in enumerate(comp.modes):
                    cols.append(V[i, j, ri, t])
                    vals.append(comp.delivered_fraction(r, L[i, j]))
            cols += [Spos[j, t], Sneg[j, t]]
            vals += [-1.0, 1.0]
            b.add_row(cols, vals, EQ, node.demand[t], "demand", (j, t))
    for t in range(T):
        b.add_row(BHnew[:, :, t].ravel(), np.ones(I * J), LE, float(econ.max_new_pipelines),
                  "build_limit", (t,))

    arcs_by_mode = []
    for r in comp.vmodes:
        ri = comp.modes.index(r)
        arcs_by_mode.append([(V[i, j, ri, :], L[i, j]) for i in range(I) for j in range(J)])
    comp.fleet_rows(NV, arcs_by_mode, [float(L[:, j].sum()) for j in range(J)])
    return comp.finish(V, {"distances": {"supply_demand": L.tolist()}})


def build_mode2(spec: ScenarioSpec) -> MilpModel:
    """Two-stage model through hubs with a fixed cluster assignment."""
    if spec.mode is not PlanMode.HUB:
        raise ValidationError("build_mode2 needs a hub-mode scenario")
    if not spec.hub_nodes or spec.hub_assignment is None:
        raise ValidationError("hub mode requires hubs and a total hub assignment")
    comp = _Compiler(spec, spec.name or "hub")
    b, T, econ = comp.b, comp.T, comp.econ
    I, K, J, R = (len(spec.supply_nodes), len(spec.hub_nodes), len(spec.demand_nodes),
                  len(comp.modes))
    Lsk = distance_matrix([n.location for n in spec.supply_nodes],
                          [n.location for n in spec.hub_nodes])
    Lkj = distance_matrix([n.location for n in spec.hub_nodes],
                          [n.location for n in spec.demand_nodes])
    hub_pos = {n.id: k for k, n in enumerate(spec.hub_nodes)}
    assigned = [hub_pos[spec.hub_assignment[n.id]] for n in spec.demand_nodes]

    Vik = b.add_family("FlowVik", (I, K, T), ("i", "k", "t"))
    Vkj = b.add_family("FlowVkj", (K, J, R, T), ("k", "j", "r", "t"))
    Spos, Sneg = comp.slack_families()
    BHik = b.add_family("BHik", (I, K, T), ("i", "k", "t"), ub=1.0, integer=True, implied=True)
    BHiknew = b.add_family("BHiknew", (I, K, T), ("i", "k", "t"), ub=1.0, integer=True)
    BHkj = b.add_family("BHkj", (K, J, T), ("k", "j", "t"), ub=1.0, integer=True, implied=True)
    BHkjnew = b.add_family("BHkjnew", (K, J, T), ("k", "j", "t"), ub=1.0, integer=True)
    NV, _, _ = comp.vehicle_families()
    p = comp.modes.index(ModeId.PIPELINE)

    for i in range(I):
        for k in range(K):
            cap = _flow_cap(econ, Lsk[i, k])
            for t in range(T):
                comp.flow_costs(Vik[i, k, t], ModeId.PIPELINE, Lsk[i, k], t)
                if math.isfinite(cap):
                    b.set_bounds(int(Vik[i, k, t]), ub=cap)
                b.add_row([Vik[i, k, t], BHik[i, k, t]], [1.0, -econ.big_m], LE, 0.0,
                          "pipeline_use_ik", (i, k, t))
            comp.pipeline_arc(BHik, BHiknew, i, k, Lsk[i, k], econ.pipeline_capital, "_ik", True)

    for k in range(K):
        for j in range(J):
            if assigned[j] != k:
                for ri in range(R):
                    for t in range(T):
                        b.set_bounds(int(Vkj[k, j, ri, t]), ub=0.0)
                comp.pipeline_arc(BHkj, BHkjnew, k, j, Lkj[k, j], 0.0, "_kj", False)
                continue
            cap = _flow_cap(econ, Lkj[k, j])
            for ri, r in enumerate(comp.modes):
                for t in range(T):
                    comp.flow_costs(Vkj[k, j, ri, t], r, Lkj[k, j], t)
            for t in range(T):
                if math.isfinite(cap):
                    b.set_bounds(int(Vkj[k, j, p, t]), ub=cap)
                b.add_row([Vkj[k, j, p, t], BHkj[k, j, t]], [1.0, -econ.big_m], LE, 0.0,
                          "pipeline_use_kj", (k, j, t))
            comp.pipeline_arc(BHkj, BHkjnew, k, j, Lkj[k, j], econ.hub_demand_capital, "_kj", True)

    for i, node in enumerate(spec.supply_nodes):
        for t in range(T):
            b.add_row(Vik[i, :, t], np.ones(K), LE, node.capacity[t], "supply", (i, t))
    for k in range(K):
        served = [j for j in range(J) if assigned[j] == k]
        for t in range(T):
            cols = list(Vik[:, k, t]) + [Vkj[k, j, ri, t] for j in served for ri in range(R)]
            vals = [1.0] * I + [-1.0] * (len(cols) - I)
            b.add_row(cols, vals, EQ, 0.0, "hub_balance", (k, t))
    for j, node in enumerate(spec.demand_nodes):
        k = assigned[j]
        for t in range(T):
            cols = [Vkj[k, j, ri, t] for ri in range(R)] + [Spos[j, t], Sneg[j, t]]
            vals = [comp.delivered_fraction(r, Lkj[k, j]) for r in comp.modes] + [-1.0, 1.0]
            b.add_row(cols, vals, EQ, node.demand[t], "demand", (j, t))
    for t in range(T):
        cols = list(BHiknew[:, :, t].ravel()) + [BHkjnew[assigned[j], j, t] for j in range(J)]
        b.add_row(cols, np.ones(len(cols)), LE, float(econ.max_new_pipelines), "build_limit", (t,))

    arcs_by_mode = []
    for r in comp.vmodes:
        ri = comp.modes.index(r)
        arcs_by_mode.append([(Vkj[assigned[j], j, ri, :], Lkj[assigned[j], j]) for j in range(J)])
    comp.fleet_rows(NV, arcs_by_mode, [float(Lkj[:, j].sum()) for j in range(J)])
    return comp.finish(Vkj, {"assignment": assigned,
                             "distances": {"supply_hub": Lsk.tolist(), "hub_demand": Lkj.tolist()}})


def build_model(spec: ScenarioSpec) -> MilpModel:
    return build_mode1(spec) if spec.mode is PlanMode.DIRECT else build_mode2(spec)


@dataclass
class PlanSolution:
    """Decoded decision values. ``values[family]`` is shaped like the family index."""

    plan_mode: PlanMode
    values: dict[str, np.ndarray]
    axes: dict[str, tuple[str, ...]]
    modes: tuple[ModeId, ...]
    vehicle_modes: tuple[ModeId, ...]
    objective: float
    delivered: float
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def periods(self) -> int:
        return int(self.values["Spos"].shape[1])

    def pipeline_status(self) -> np.ndarray:
        """Existing pipelines per (arc, t), arcs flattened over every stage."""
        if self.plan_mode is PlanMode.DIRECT:
            return self.values["BH"].reshape(-1, self.periods)
        return np.concatenate([self.values["BHik"].reshape(-1, self.periods),
                               self.values["BHkj"].reshape(-1, self.periods)])

    def flow_by_mode(self) -> np.ndarray:
        """Total flow per (mode position, t) on the final delivery stage."""
        if self.plan_mode is PlanMode.DIRECT:
            return self.values["FlowV"].sum(axis=(0, 1))
        return self.values["FlowVkj"].sum(axis=(0, 1))


def extract_solution(model: MilpModel, raw, tol: float = 1e-6) -> PlanSolution:
    x = np.asarray(raw, dtype=float)
    if x.shape != (model.n_cols,):
        raise ValueError(f"solution has {x.size} values, model has {model.n_cols} columns")
    low = model.lb - x
    high = x - model.ub
    worst = np.maximum(low, high)
    if worst.size and worst.max() > tol:
        j = int(np.argmax(worst))
        raise SolutionIntegrityError(
            f"column {model.col_name(j)} = {x[j]!r} outside [{model.lb[j]}, {model.ub[j]}]")
    values = {fam: x[ids] + 0.0 for fam, ids in model.index.items()}  # drops negative zeros
    viol = model.row_violation(x)
    residuals: dict[str, float] = {}
    for i, tag in enumerate(model.row_tags):
        residuals[tag] = max(residuals.get(tag, 0.0), float(viol[i]))
    meta = model.metadata
    tv = float(model.tv @ x) if model.tv is not None else 0.0
    return PlanSolution(
        plan_mode=PlanMode(meta.get("plan_mode", "direct")),
        values=values,
        axes=dict(model.index_names),
        modes=tuple(ModeId(r) for r in meta.get("modes", ())),
        vehicle_modes=tuple(ModeId(r) for r in meta.get("vehicle_modes", ())),
        objective=float(model.c @ x) + model.offset,
        delivered=tv,
        residuals=residuals,
    )


def verify_plan(spec: ScenarioSpec, plan: PlanSolution, tol: float = 1e-6,
                int_tol: float = 1e-6) -> dict[str, list[str]]:
    """Check a decoded plan directly against the scenario data.

    Independent of the model rows: every quantity is recomputed from the
    spec. Returns failures grouped by invariant name; an empty list means
    the invariant holds.
    """
    T, G = spec.periods, spec.econ.construction_gap
    econ = spec.econ
    v = plan.values
    out: dict[str, list[str]] = {name: [] for name in (
        "integrality", "supply", "mass_balance", "hub_balance", "cluster", "flow_implies_pipeline",
        "pipeline_dynamics", "fleet_telescoping", "scrap_linkage", "build_budget",
        "no_late_build", "flow_cap", "vehicle_requirement", "emission")}
    modes = plan.modes
    pidx = modes.index(ModeId.PIPELINE) if ModeId.PIPELINE in modes else None
    kg_tol = lambda ref: tol * max(1.0, abs(ref))  # noqa: E731

    for fam in ("BH", "BHnew", "BHik", "BHiknew", "BHkj", "BHkjnew", "NV", "NVnew", "NVscrap"):
        if fam in v and v[fam].size:
            frac = np.abs(v[fam] - np.round(v[fam]))
            if frac.max() > int_tol:
                out["integrality"].append(f"{fam} off integer by {frac.max():.3g}")

    if plan.plan_mode is PlanMode.DIRECT:
        L = distance_matrix([n.location for n in spec.supply_nodes],
                            [n.location for n in spec.demand_nodes])
        V = v["FlowV"]
        final = [(V, L, None)]
        arcs = [("BH", "BHnew", L)]
        for i, node in enumerate(spec.supply_nodes):
            for t in range(T):
                used = V[i, :, :, t].sum()
                if used > node.capacity[t] + kg_tol(node.capacity[t]):
                    out["supply"].append(f"supply {i} t={t}: {used} > {node.capacity[t]}")
        if pidx is not None:
            _check_pipe_flow(out, V[:, :, pidx, :], v["BH"], L, econ, "direct", tol)
    else:
        Lsk = distance_matrix([n.location for n in spec.supply_nodes],
                              [n.location for n in spec.hub_nodes])
        Lkj = distance_matrix([n.location for n in spec.hub_nodes],
                              [n.location for n in spec.demand_nodes])
        hub_pos = {n.id: k for k, n in enumerate(spec.hub_nodes)}
        assigned = [hub_pos[spec.hub_assignment[n.id]] for n in spec.demand_nodes]
        Vik, Vkj = v["FlowVik"], v["FlowVkj"]
        final = [(Vkj, Lkj, assigned)]
        arcs = [("BHik", "BHiknew", Lsk), ("BHkj", "BHkjnew", Lkj)]
        for i, node in enumerate(spec.supply_nodes):
            for t in range(T):
                used = Vik[i, :, t].sum()
                if used > node.capacity[t] + kg_tol(node.capacity[t]):
                    out["supply"].append(f"supply {i} t={t}: {used} > {node.capacity[t]}")
        for k in range(len(spec.hub_nodes)):
            for t in range(T):
                res = Vik[:, k, t].sum() - Vkj[k, :, :, t].sum()
                if abs(res) > kg_tol(Vik[:, k, t].sum()):
                    out["hub_balance"].append(f"hub {k} t={t}: residual {res}")
        for j, k in enumerate(assigned):
            others = [kk for kk in range(len(spec.hub_nodes)) if kk != k]
            if others and (np.abs(Vkj[others, j]).max() > tol or v["BHkj"][others, j].max() > tol):
                out["cluster"].append(f"demand {j} served by a hub other than {k}")
        _check_pipe_flow(out, Vik, v["BHik"], Lsk, econ, "ik", tol)
        _check_pipe_flow(out, Vkj[:, :, pidx, :], v["BHkj"], Lkj, econ, "kj", tol)

    # demand balance with per-arc losses
    for V, L, assigned in final:
        for j, node in enumerate(spec.demand_nodes):
            for t in range(T):
                net = 0.0
                for a in range(V.shape[0]):
                    for ri, r in enumerate(modes):
                        ms = spec.mode_spec(r)
                        net += V[a, j, ri, t] * (1.0 - ms.loss_rate * L[a, j] / ms.capacity)
                res = net - v["Spos"][j, t] + v["Sneg"][j, t] - node.demand[t]
                if abs(res) > kg_tol(node.demand[t]):
                    out["mass_balance"].append(f"demand {j} t={t}: residual {res}")

    # pipeline existence dynamics, budget and late builds
    new_total = np.zeros(T)
    for bh_name, new_name, _ in arcs:
        BH, BHn = np.round(v[bh_name]), np.round(v[new_name])
        new_total += BHn.reshape(-1, T).sum(axis=0)
        for idx in np.ndindex(*BH.shape[:2]):
            bh, bn = BH[idx], BHn[idx]
            expect = np.zeros(T)
            for t in range(T):
                prev = expect[t - 1] if t > 0 else 0.0
                started = bn[t - G] if t - G >= 0 else 0.0
                expect[t] = prev + started
            if not np.array_equal(bh, expect):
                out["pipeline_dynamics"].append(f"{bh_name}{idx}: {bh.tolist()} != {expect.tolist()}")
            for t in range(T):
                if t + G > T - 1 and bn[t] != 0:
                    out["no_late_build"].append(f"{new_name}{idx} t={t}")
    for t in range(T):
        if new_total[t] > econ.max_new_pipelines:
            out["build_budget"].append(f"t={t}: {new_total[t]} > {econ.max_new_pipelines}")

    # fleet
    NV, NVn, NVs = (np.round(v[f]) for f in ("NV", "NVnew", "NVscrap"))
    for q, r in enumerate(plan.vehicle_modes):
        ms = spec.mode_spec(r)
        tele = np.cumsum(NVn[q]) - np.cumsum(NVs[q])
        if not np.array_equal(NV[q], tele):
            out["fleet_telescoping"].append(f"mode {r.label}: {NV[q].tolist()} != {tele.tolist()}")
        for t in range(T):
            expect = NVn[q, t - ms.lifespan] if t >= ms.lifespan else 0.0
            if NVs[q, t] != expect:
                out["scrap_linkage"].append(f"mode {r.label} t={t}: {NVs[q, t]} != {expect}")
        ri = modes.index(r)
        for t in range(T):
            need = 0.0
            for V, L, assigned in final:
                for a in range(V.shape[0]):
                    for j in range(V.shape[1]):
                        need += V[a, j, ri, t] * vehicle_requirement_coef(
                            ms, L[a, j], spec.options.trip_time)
            if NV[q, t] < need - 1e-6 * max(1.0, need):
                out["vehicle_requirement"].append(f"mode {r.label} t={t}: {NV[q, t]} < {need}")
    for V, L, _ in final:
        for j in range(len(spec.demand_nodes)):
            for t in range(T):
                ceil = econ.ceiling(j, t)
                if math.isinf(ceil):
                    continue
                em = sum(spec.mode_spec(r).emission_factor * L[:, j].sum() * NV[q, t]
                         / spec.mode_spec(r).fuel_economy for q, r in enumerate(plan.vehicle_modes))
                if em > ceil + kg_tol(ceil):
                    out["emission"].append(f"demand {j} t={t}: {em} > {ceil}")
    return out


def _check_pipe_flow(out, Vp, BH, L, econ, label, tol):
    for idx in np.ndindex(*Vp.shape):
        a, c, t = idx
        f = Vp[idx]
        if f > 1e-6 and BH[a, c, t] < 1.0 - 1e-6:
            out["flow_implies_pipeline"].append(f"{label} arc ({a},{c}) t={t}: flow {f} without pipeline")
        cap = _flow_cap(econ, L[a, c])
        if f > cap + tol * max(1.0, cap):
            out["flow_cap"].append(f"{label} arc ({a},{c}) t={t}: {f} > {cap}")


def plan_failures(report: dict[str, list[str]]) -> list[str]:
    return [f"{name}: {msg}" for name, msgs in report.items() for msg in msgs]
