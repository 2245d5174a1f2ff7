"""Analysis metrics computed from a decoded plan, and their CSV tables.

Costs are recomputed here from the scenario data and the plan values, not
read back from the model's objective vector, so the breakdown identity
against the solver's total is a real cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import (CarbonCost, ModeId, PlanMode, ScenarioSpec, ValidationError,
                     present_value_factor, straight_line_distance)
from .formulation import COST_PARTS, PlanSolution

BUILT = 0.5  # binary values above this count as built

MODE_SHARE_HEADER = ("bin", "start_period", "end_period", "start_year", "end_year", "mode",
                     "flow_kg", "share", "empty")
COVERAGE_HEADER = ("period", "year", "pipelines", "total_required", "coverage")
VEHICLES_HEADER = ("period", "year", "mode", "purchased", "scrapped", "fleet")
COSTS_HEADER = ("period", "year") + COST_PARTS + ("total",)
SUMMARY_HEADER = ("metric", "value")
TOPOLOGY_HEADER = ("period", "year", "stage", "origin", "destination", "new")


def fmt(v) -> str:
    """Shortest round-trip text for numbers; integers stay integers."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


# -- period bins -------------------------------------------------------------

def default_bin_edges(start_year: int, periods: int, width: int = 5) -> list[int]:
    """Edges of blocks that end on years divisible by ``width``.

    The first block runs from the start year to the first such year, so a
    horizon from 2025 splits as 2025-2030, 2031-2035, and so on.
    """
    edges = [0]
    for t in range(periods):
        year = start_year + t
        if year % width == 0 and t > 0 and t + 1 < periods:
            edges.append(t + 1)
    edges.append(periods)
    return sorted(set(edges))


def _check_edges(edges: Sequence[int], periods: int) -> list[int]:
    edges = [int(e) for e in edges]
    if len(edges) < 2 or edges[0] != 0 or edges[-1] != periods:
        raise ValidationError(f"bin edges {edges} must start at 0 and end at {periods}")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError(f"bin edges {edges} must be strictly increasing")
    return edges


@dataclass
class ModeShareTable:
    modes: tuple[ModeId, ...]
    edges: tuple[int, ...]
    flow: np.ndarray  # (bins, modes) kg
    shares: np.ndarray  # (bins, modes)
    empty: np.ndarray  # (bins,)

    @property
    def bins(self) -> list[tuple[int, int]]:
        return list(zip(self.edges[:-1], self.edges[1:]))

    def share_of(self, mode: ModeId) -> np.ndarray:
        return self.shares[:, self.modes.index(mode)]


def mode_share_by_period(sol: PlanSolution, bin_edges: Sequence[int]) -> ModeShareTable:
    """Fraction of final-stage flow carried by each mode in each bin."""
    T = sol.periods
    edges = _check_edges(bin_edges, T)
    per_t = np.clip(sol.flow_by_mode(), 0.0, None)  # (modes, T); drop round-off negatives
    flow = np.array([per_t[:, a:b].sum(axis=1) for a, b in zip(edges[:-1], edges[1:])])
    totals = flow.sum(axis=1)
    empty = totals <= 0.0
    shares = np.zeros_like(flow)
    shares[~empty] = flow[~empty] / totals[~empty, None]
    return ModeShareTable(tuple(sol.modes), tuple(edges), flow, shares, empty)


# -- pipelines and vehicles -------------------------------------------------

def _stage_arrays(sol: PlanSolution) -> list[tuple[str, np.ndarray, np.ndarray]]:
    v = sol.values
    if sol.plan_mode is PlanMode.DIRECT:
        return [("supply_demand", v["BH"], v["BHnew"])]
    return [("supply_hub", v["BHik"], v["BHiknew"]), ("hub_demand", v["BHkj"], v["BHkjnew"])]


def default_required(sol: PlanSolution) -> int:
    """Arcs that could carry a pipeline.

    Direct mode counts every supply-demand pair. Hub mode counts every
    supply-hub pair plus one hub link per demand node.
    """
    v = sol.values
    if sol.plan_mode is PlanMode.DIRECT:
        I, J, _ = v["BH"].shape
        return I * J
    I, K, _ = v["BHik"].shape
    J = v["BHkj"].shape[1]
    return I * K + J


def pipelines_present(sol: PlanSolution, t: int) -> int:
    return int(sum(int(np.sum(bh[..., t] > BUILT)) for _, bh, _ in _stage_arrays(sol)))


def pipeline_coverage_ratio(sol: PlanSolution, t: int, total_required: int | None = None) -> float:
    if total_required is None:
        total_required = default_required(sol)
    if total_required <= 0:
        raise ValidationError("total_required must be positive")
    if not 0 <= t < sol.periods:
        raise ValidationError(f"period {t} outside the horizon 0..{sol.periods - 1}")
    return pipelines_present(sol, t) / total_required


def coverage_series(sol: PlanSolution, total_required: int | None = None) -> np.ndarray:
    return np.array([pipeline_coverage_ratio(sol, t, total_required) for t in range(sol.periods)])


@dataclass
class VehicleSeries:
    modes: tuple[ModeId, ...]
    purchased: np.ndarray  # (vehicle modes, T)
    scrapped: np.ndarray
    fleet: np.ndarray

    @property
    def total_purchased(self) -> np.ndarray:
        return self.purchased.sum(axis=0)


def vehicle_purchase_series(sol: PlanSolution) -> VehicleSeries:
    v = sol.values
    snap = lambda a: np.round(a) + 0.0  # noqa: E731  integer counts up to solver tolerance
    return VehicleSeries(tuple(sol.vehicle_modes), snap(v["NVnew"]), snap(v["NVscrap"]),
                         snap(v["NV"]))


# -- costs ----------------------------------------------------------------

def _distances(spec: ScenarioSpec):
    d = lambda a, b: np.array([[straight_line_distance(p.location, q.location)  # noqa: E731
                                for q in b] for p in a])
    if spec.mode is PlanMode.DIRECT:
        return d(spec.supply_nodes, spec.demand_nodes), None
    return d(spec.supply_nodes, spec.hub_nodes), d(spec.hub_nodes, spec.demand_nodes)


def cost_series(spec: ScenarioSpec, sol: PlanSolution) -> dict[str, np.ndarray]:
    """Discounted cost per component and period, recomputed from the plan."""
    T = spec.periods
    e = spec.econ
    v = sol.values
    pv = np.array([present_value_factor(e.beta, t) for t in range(T)])
    out = {part: np.zeros(T) for part in COST_PARTS}
    modes = list(sol.modes)
    vmodes = list(sol.vehicle_modes)
    flow_apportioned = spec.options.carbon_cost is CarbonCost.FLOW_APPORTIONED

    def arc_flow_costs(flow, r, length):
        """Add operating and loss costs for a per-period flow series on one arc."""
        ms = spec.mode_spec(r)
        if ms.is_vehicle:
            out["C_FO"] += pv * flow * ms.fuel_price * 2.0 * length / (ms.fuel_economy * ms.capacity)
            out["C_LO"] += pv * flow * ms.wage * (2.0 * length / ms.speed + ms.load_time) \
                / ms.capacity
            if flow_apportioned:
                out["C_CL"] += pv * flow * e.co2_penalty * ms.emission_factor * length \
                    / (ms.capacity * ms.fuel_economy)
        out["C_HL"] += pv * flow * e.loss_penalty * ms.loss_rate * length / ms.capacity

    def pipe_costs(bh, bhnew, length, capital):
        out["C_HC"] += pv * bhnew * capital * length
        out["C_HO"] += pv * bh * e.pipeline_maintenance * length

    L, Lkj = _distances(spec)
    if spec.mode is PlanMode.DIRECT:
        I, J = L.shape
        for i in range(I):
            for j in range(J):
                for ri, r in enumerate(modes):
                    arc_flow_costs(v["FlowV"][i, j, ri], r, L[i, j])
                pipe_costs(v["BH"][i, j], v["BHnew"][i, j], L[i, j], e.pipeline_capital)
        all_length = float(L.sum())
    else:
        I, K = L.shape
        J = Lkj.shape[1]
        for i in range(I):
            for k in range(K):
                arc_flow_costs(v["FlowVik"][i, k], ModeId.PIPELINE, L[i, k])
                pipe_costs(v["BHik"][i, k], v["BHiknew"][i, k], L[i, k], e.pipeline_capital)
        for k in range(K):
            for j in range(J):
                for ri, r in enumerate(modes):
                    arc_flow_costs(v["FlowVkj"][k, j, ri], r, Lkj[k, j])
                pipe_costs(v["BHkj"][k, j], v["BHkjnew"][k, j], Lkj[k, j], e.hub_demand_capital)
        all_length = float(Lkj.sum())

    for q, r in enumerate(vmodes):
        ms = spec.mode_spec(r)
        out["C_VC"] += pv * v["NVnew"][q] * ms.capital_cost
        if not flow_apportioned:
            out["C_CL"] += pv * v["NV"][q] * e.co2_penalty * ms.emission_factor * all_length \
                / ms.fuel_economy
    slack = v["Spos"] + v["Sneg"]
    out["C_SL"] += pv * e.imbalance_penalty * slack.sum(axis=0)
    return out


@dataclass
class LevelizedBreakdown:
    components: dict[str, float]
    total_cost: float
    delivered: float
    lch2: float
    solver_total: float
    identity_error: float

    @property
    def defined(self) -> bool:
        return self.delivered > 0.0

    def rows(self) -> list[tuple[str, str]]:
        rows = [(k, fmt(v)) for k, v in self.components.items()]
        rows += [("TC", fmt(self.total_cost)), ("TV", fmt(self.delivered)),
                 ("LCH2", fmt(self.lch2) if self.defined else "undefined"),
                 ("solver_TC", fmt(self.solver_total)),
                 ("identity_error", fmt(self.identity_error))]
        return rows


def levelized_breakdown(spec: ScenarioSpec, sol: PlanSolution,
                        series: dict[str, np.ndarray] | None = None) -> LevelizedBreakdown:
    """Eight cost components, their total, delivered volume and the ratio.

    ``identity_error`` is the relative gap between the recomputed total and
    the objective the solver reported for the same plan.
    """
    series = cost_series(spec, sol) if series is None else series
    comps = {k: float(np.sum(series[k])) for k in COST_PARTS}
    tc = math.fsum(comps.values())
    tv = float(np.sum(sol.flow_by_mode()))
    lch2 = tc / tv if tv > 0 else float("nan")
    err = abs(tc - sol.objective) / max(abs(sol.objective), 1e-12) if sol.objective else abs(tc)
    return LevelizedBreakdown(comps, tc, tv, lch2, sol.objective, err)


# -- bundle and CSV -------------------------------------------------------

@dataclass
class MetricsBundle:
    mode_share: ModeShareTable
    coverage: np.ndarray
    total_required: int
    vehicles: VehicleSeries
    costs: dict[str, np.ndarray]
    breakdown: LevelizedBreakdown
    years: tuple[int, ...]
    topology: list[tuple[int, str, int, int, int]] = field(default_factory=list)

    @property
    def lch2(self) -> float:
        return self.breakdown.lch2


def topology(sol: PlanSolution) -> list[tuple[int, str, int, int, int]]:
    """(period, stage, origin, destination, newly started) for every existing pipeline."""
    rows = []
    for t in range(sol.periods):
        for stage, bh, bhnew in _stage_arrays(sol):
            for a, c in zip(*np.nonzero(bh[..., t] > BUILT)):
                rows.append((t, stage, int(a), int(c), int(bhnew[a, c, t] > BUILT)))
    return rows


def compute_metrics(spec: ScenarioSpec, sol: PlanSolution,
                    bin_edges: Sequence[int] | None = None,
                    total_required: int | None = None) -> MetricsBundle:
    T = spec.periods
    if bin_edges is None:
        bin_edges = default_bin_edges(spec.horizon.start_year, T)
    required = default_required(sol) if total_required is None else int(total_required)
    series = cost_series(spec, sol)
    return MetricsBundle(
        mode_share=mode_share_by_period(sol, bin_edges),
        coverage=coverage_series(sol, required),
        total_required=required,
        vehicles=vehicle_purchase_series(sol),
        costs=series,
        breakdown=levelized_breakdown(spec, sol, series),
        years=spec.horizon.years,
        topology=topology(sol),
    )


def metrics_tables(m: MetricsBundle) -> dict[str, tuple[tuple[str, ...], list[list[str]]]]:
    """Every CSV table as (header, formatted rows), keyed by file name."""
    years = m.years
    share_rows = []
    for b, (a, z) in enumerate(m.mode_share.bins):
        for ri, r in enumerate(m.mode_share.modes):
            share_rows.append([fmt(b), fmt(a), fmt(z - 1), fmt(years[a]), fmt(years[z - 1]),
                               r.label, fmt(m.mode_share.flow[b, ri]),
                               fmt(m.mode_share.shares[b, ri]), fmt(bool(m.mode_share.empty[b]))])
    cov_rows = [[fmt(t), fmt(years[t]), fmt(int(round(c * m.total_required))),
                 fmt(m.total_required), fmt(c)] for t, c in enumerate(m.coverage)]
    veh = m.vehicles
    veh_rows = []
    for t in range(len(years)):
        for q, r in enumerate(veh.modes):
            veh_rows.append([fmt(t), fmt(years[t]), r.label, fmt(int(veh.purchased[q, t])),
                             fmt(int(veh.scrapped[q, t])), fmt(int(veh.fleet[q, t]))])
        veh_rows.append([fmt(t), fmt(years[t]), "total", fmt(int(veh.purchased[:, t].sum())),
                         fmt(int(veh.scrapped[:, t].sum())), fmt(int(veh.fleet[:, t].sum()))])
    cost_rows = []
    for t in range(len(years)):
        vals = [float(m.costs[k][t]) for k in COST_PARTS]
        cost_rows.append([fmt(t), fmt(years[t])] + [fmt(v) for v in vals] + [fmt(math.fsum(vals))])
    topo_rows = [[fmt(t), fmt(years[t]), stage, fmt(a), fmt(c), fmt(new)]
                 for t, stage, a, c, new in m.topology]
    summary = [list(r) for r in m.breakdown.rows()]
    return {
        "mode_share.csv": (MODE_SHARE_HEADER, share_rows),
        "coverage.csv": (COVERAGE_HEADER, cov_rows),
        "vehicles.csv": (VEHICLES_HEADER, veh_rows),
        "costs.csv": (COSTS_HEADER, cost_rows),
        "summary.csv": (SUMMARY_HEADER, summary),
        "topology.csv": (TOPOLOGY_HEADER, topo_rows),
    }


def write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_metrics(m: MetricsBundle, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_table(directory / name, header, rows)
            for name, (header, rows) in metrics_tables(m).items()]


__all__ = [
    "COSTS_HEADER", "COVERAGE_HEADER", "MODE_SHARE_HEADER", "SUMMARY_HEADER", "TOPOLOGY_HEADER",
    "VEHICLES_HEADER", "LevelizedBreakdown", "MetricsBundle", "ModeShareTable", "VehicleSeries",
    "compute_metrics", "cost_series", "coverage_series", "default_bin_edges", "default_required",
    "fmt", "levelized_breakdown", "metrics_tables", "mode_share_by_period",
    "pipeline_coverage_ratio", "pipelines_present", "topology", "vehicle_purchase_series",
    "write_metrics", "write_table",
]
