"""Scenario files, documented defaults and the builtin S1-S5 reconstructions.

A scenario document is JSON validated against ``data/scenario.schema.json``.
Any parameter the document leaves out is filled from the defaults below and
recorded in the resolved spec's ``provenance`` list, so a run always says
which numbers were assumed rather than given.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .clustering import kmeans_hubs
from .domain import (DemandNode, EconParams, FormulationOptions, GeoPoint, Horizon, HubNode,
                     ModeId, NodeId, NodeKind, PlanMode, ScenarioSpec, SupplyNode,
                     TransportModeSpec, ValidationError)
from .forecast import (DEFAULT_GROWTH_RATE, DEFAULT_HEADROOM, TEXAS_FCEV_SHARE,
                       DemandModelParams, FcevShareTable, allocate_supply, county_demand_series)
from .solver.branch_and_bound import MilpOptions

SCHEMA_VERSION = 1

# Published cost parameters per transport method.
PUBLISHED_MODE_COSTS: dict[str, dict[str, float]] = {
    "pipeline": {"capital_cost": 1735904.0, "lifespan": 40},
    "tube_trailer": {"capital_cost": 271420.0, "lifespan": 12, "availability_hours": 10.0,
                     "fuel_economy": 2.86, "speed": 80.0, "capacity": 500.0, "load_time": 2.0,
                     "fuel_price": 0.71, "wage": 28.0},
    "liquid_truck": {"capital_cost": 173709.0, "lifespan": 8, "availability_hours": 10.0,
                     "fuel_economy": 2.86, "speed": 80.0, "capacity": 3500.0, "load_time": 3.0,
                     "fuel_price": 0.71, "wage": 26.0},
    "lohc_trailer": {"capital_cost": 86854.0, "lifespan": 12, "availability_hours": 10.0,
                     "fuel_economy": 2.86, "speed": 80.0, "capacity": 1500.0, "load_time": 2.0,
                     "fuel_price": 0.71, "wage": 28.0},
}
PUBLISHED_BETA = 0.066

# Assumed values for parameters without a published number.
DEFAULT_LOSS_RATE = {"pipeline": 0.0001, "tube_trailer": 0.001, "liquid_truck": 0.005,
                     "lohc_trailer": 0.002}
DEFAULT_EMISSION = {"pipeline": 0.0, "tube_trailer": 0.3, "liquid_truck": 0.4,
                    "lohc_trailer": 0.35}
DEFAULT_PIPELINE_CAPACITY = 1000.0  # pipeline loss rate then reads per tonne-km
DEFAULT_ECON = {
    "loss_penalty": 10.0,
    "co2_penalty": 0.05,
    "imbalance_penalty": 100.0,
    "max_new_pipelines": 5,
    "base_flow_limit": 5e7,
    "base_length": 100.0,
    "emission_ceiling": None,
    "construction_gap": 1,
    "pipeline_maintenance": 0.025 * 1735904.0,  # 2.5 % of capex per km-year
    "hub_demand_pipeline_capital": None,
}
BIG_M_FACTOR = 10.0
LOW_DEMAND_RATIO = 0.25
MODE_LABELS = tuple(m.label for m in ModeId)


def load_schema() -> dict:
    text = resources.files("h2net").joinpath("data/scenario.schema.json").read_text("utf-8")
    return json.loads(text)


def load_counties() -> dict:
    text = resources.files("h2net").joinpath("data/counties.json").read_text("utf-8")
    return json.loads(text)


def validate_document(doc: Any) -> None:
    """Raise ValidationError listing every schema violation with its path."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{path}: {e.message}")
        raise ValidationError("scenario file failed validation:\n  " + "\n  ".join(lines))


@dataclass
class ResolvedScenario:
    spec: ScenarioSpec
    solver: MilpOptions = field(default_factory=MilpOptions)
    forecast_rows: dict[str, list[dict]] = field(default_factory=dict)
    clustering: Any = None


def resolve_document(doc: Mapping[str, Any]) -> ResolvedScenario:
    """Validate a scenario document, apply defaults, run forecast and clustering."""
    validate_document(doc)
    doc = copy.deepcopy(dict(doc))
    prov: list[str] = list(doc.get("provenance", []))

    def default(path: str, value):
        prov.append(f"{path} = {value!r} (default)")
        return value

    horizon = Horizon(doc["horizon"]["start_year"], doc["horizon"]["periods"])
    T = horizon.periods
    mode = PlanMode(doc["mode"])

    # transport methods
    labels = doc.get("modes")
    if labels is None:
        labels = list(MODE_LABELS)
        default("modes", labels)
    overrides = doc.get("mode_parameters", {})
    mode_specs = []
    for label in labels:
        given = overrides.get(label, {})
        values = {}
        taken = []
        published = dict(PUBLISHED_MODE_COSTS[label])
        if label == "pipeline":
            published["capacity"] = None
        for key in ("capital_cost", "lifespan", "capacity", "availability_hours", "fuel_economy",
                    "speed", "load_time", "fuel_price", "wage"):
            if key in given:
                values[key] = given[key]
            elif key in published:
                if published[key] is None:
                    values[key] = default(f"mode_parameters.{label}.{key}",
                                          DEFAULT_PIPELINE_CAPACITY)
                else:
                    values[key] = published[key]
                    taken.append(key)
        if taken:
            prov.append(f"mode_parameters.{label}: published values for {', '.join(taken)}")
        for key, table in (("loss_rate", DEFAULT_LOSS_RATE), ("emission_factor", DEFAULT_EMISSION)):
            values[key] = given[key] if key in given else default(
                f"mode_parameters.{label}.{key}", table[label])
        mode_specs.append(TransportModeSpec(mode_id=ModeId.parse(label), **values))

    # demand, with the forecast when populations are given
    fc = doc.get("forecast", {})
    forecast_rows: dict[str, list[dict]] = {}
    years = list(horizon.years)
    scale = fc.get("demand_scale", 1.0)
    needs_forecast = any("demand" not in n for n in doc["demand_nodes"])
    if needs_forecast:
        base_year = fc["base_year"] if "base_year" in fc else default("forecast.base_year", 2024)
        growth = fc["growth_rate"] if "growth_rate" in fc else default(
            "forecast.growth_rate", DEFAULT_GROWTH_RATE)
        table = FcevShareTable(tuple(tuple(a) for a in fc["share_table"])) \
            if "share_table" in fc else FcevShareTable(TEXAS_FCEV_SHARE)
        params = DemandModelParams(**fc.get("params", {}))
    demand_nodes = []
    names = _unique_names(doc["demand_nodes"], "demand")
    for j, node in enumerate(doc["demand_nodes"]):
        if "demand" in node:
            series = [scale * v for v in node["demand"]]
        elif "population" in node:
            rows = county_demand_series(node["population"], base_year, years, growth, table, params)
            forecast_rows[node["name"]] = rows
            series = [scale * r["demand"] for r in rows]
        else:
            raise ValidationError(f"demand_nodes/{j}: needs either 'demand' or 'population'")
        if len(series) != T:
            raise ValidationError(
                f"demand_nodes/{j} ({node['name']}): expected {T} demand values, got {len(series)}")
        for t, value in enumerate(series):
            if value < 0:
                raise ValidationError(
                    f"demand_nodes/{j} ({node['name']}): negative demand {value} at period {t}")
        demand_nodes.append(DemandNode(NodeId(NodeKind.DEMAND, j),
                                       GeoPoint(node["latitude"], node["longitude"]),
                                       tuple(series), node["name"]))

    # supply
    total = [sum(n.demand[t] for n in demand_nodes) for t in range(T)]
    _unique_names(doc["supply_nodes"], "supply")
    explicit = ["capacity" in n for n in doc["supply_nodes"]]
    if all(explicit):
        caps = [list(n["capacity"]) for n in doc["supply_nodes"]]
    elif not any(explicit):
        headroom = fc["headroom"] if "headroom" in fc else default("forecast.headroom",
                                                                   DEFAULT_HEADROOM)
        shares = {}
        for i, n in enumerate(doc["supply_nodes"]):
            if "share" not in n:
                raise ValidationError(f"supply_nodes/{i} ({n['name']}): needs 'capacity' or 'share'")
            shares[n["name"]] = n["share"]
        alloc = allocate_supply(total, shares, headroom)
        caps = [list(alloc[n["name"]]) for n in doc["supply_nodes"]]
    else:
        raise ValidationError("either every supply node gives 'capacity' or none does")
    supply_nodes = []
    for i, (node, cap) in enumerate(zip(doc["supply_nodes"], caps)):
        for t, value in enumerate(cap):
            if value < 0:
                raise ValidationError(
                    f"supply_nodes/{i} ({node['name']}): negative capacity {value} at period {t}")
        supply_nodes.append(SupplyNode(NodeId(NodeKind.SUPPLY, i),
                                       GeoPoint(node["latitude"], node["longitude"]),
                                       tuple(cap), node["name"]))

    # hubs
    hub_nodes: list[HubNode] = []
    assignment = None
    clustering = None
    if mode is PlanMode.HUB:
        if "hub_nodes" in doc:
            hub_names = _unique_names(doc["hub_nodes"], "hub")
            hub_nodes = [HubNode(NodeId(NodeKind.HUB, k), GeoPoint(h["latitude"], h["longitude"]),
                                 h["name"]) for k, h in enumerate(doc["hub_nodes"])]
            if "hub_assignment" not in doc:
                raise ValidationError("hub_assignment: required when hub_nodes are given")
            amap = doc["hub_assignment"]
            assignment = {}
            for j, n in enumerate(demand_nodes):
                if n.name not in amap:
                    raise ValidationError(f"hub_assignment: demand node {n.name} is unassigned")
                if amap[n.name] not in hub_names:
                    raise ValidationError(f"hub_assignment/{n.name}: unknown hub {amap[n.name]}")
                assignment[n.id] = hub_nodes[hub_names.index(amap[n.name])].id
            extra = set(amap) - set(names)
            if extra:
                raise ValidationError(f"hub_assignment: unknown demand nodes {sorted(extra)}")
        else:
            cl = doc.get("clustering", {})
            K = cl["K"] if "K" in cl else default("clustering.K", 3)
            seed = cl["seed"] if "seed" in cl else default("clustering.seed", 0)
            weighted = cl.get("weighted", True)
            points = [(n.location, sum(n.demand)) for n in demand_nodes]
            clustering = kmeans_hubs(points, K, seed=seed, max_iters=cl.get("max_iters", 100),
                                     ids=[n.id for n in demand_nodes], weighted=weighted)
            hub_nodes = [HubNode(NodeId(NodeKind.HUB, k), c, f"hub{k}")
                         for k, c in enumerate(clustering.centroids)]
            assignment = {j: hub_nodes[k].id for j, k in clustering.assignment.items()}
    elif "hub_nodes" in doc or "hub_assignment" in doc:
        raise ValidationError("hub_nodes/hub_assignment are only valid in hub mode")

    # economics
    e = doc.get("econ", {})
    pipe_given = overrides.get("pipeline", {}).get("capital_cost")
    econ_values = {}
    if "beta" in e:
        econ_values["beta"] = e["beta"]
    else:
        econ_values["beta"] = PUBLISHED_BETA
        prov.append(f"econ.beta = {PUBLISHED_BETA} (published value)")
    if "pipeline_capital" in e:
        econ_values["pipeline_capital"] = e["pipeline_capital"]
    else:
        econ_values["pipeline_capital"] = pipe_given if pipe_given is not None \
            else PUBLISHED_MODE_COSTS["pipeline"]["capital_cost"]
    mode_specs = [_with_capital(m, econ_values["pipeline_capital"])
                  if m.mode_id is ModeId.PIPELINE and pipe_given is None else m
                  for m in mode_specs]
    for key, value in DEFAULT_ECON.items():
        econ_values[key] = e[key] if key in e else default(f"econ.{key}", value)
    if "big_m" in e:
        econ_values["big_m"] = e["big_m"]
    else:
        peak = max((max(n.capacity) for n in supply_nodes), default=0.0)
        econ_values["big_m"] = default("econ.big_m", BIG_M_FACTOR * max(peak, 1.0))
    econ = EconParams(**econ_values)

    opts = doc.get("options", {})
    spec = ScenarioSpec(
        mode=mode, horizon=horizon, supply_nodes=tuple(supply_nodes),
        demand_nodes=tuple(demand_nodes), mode_specs=tuple(mode_specs), econ=econ,
        hub_nodes=tuple(hub_nodes), hub_assignment=assignment,
        options=FormulationOptions(**opts), name=doc.get("name", ""), provenance=tuple(prov))
    solver = MilpOptions(**doc.get("solver", {}))
    return ResolvedScenario(spec, solver, forecast_rows, clustering)


def _with_capital(m: TransportModeSpec, capital: float) -> TransportModeSpec:
    from dataclasses import replace
    return replace(m, capital_cost=capital)


def _unique_names(nodes, kind: str) -> list[str]:
    names = [n["name"] for n in nodes]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ValidationError(f"duplicate {kind} node names: {sorted(dup)}")
    return names


def load_scenario(path: str | Path) -> ScenarioSpec:
    return load_scenario_file(path).spec


def load_scenario_file(path: str | Path) -> ResolvedScenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return resolve_document(doc)


def spec_to_document(spec: ScenarioSpec, solver: MilpOptions | None = None) -> dict:
    """Fully explicit document; resolving it again needs no defaults."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "mode": spec.mode.value,
        "horizon": {"start_year": spec.horizon.start_year, "periods": spec.horizon.periods},
        "supply_nodes": [{"name": n.name or str(n.id), "latitude": n.location.latitude,
                          "longitude": n.location.longitude, "capacity": list(n.capacity)}
                         for n in spec.supply_nodes],
        "demand_nodes": [{"name": n.name or str(n.id), "latitude": n.location.latitude,
                          "longitude": n.location.longitude, "demand": list(n.demand)}
                         for n in spec.demand_nodes],
        "modes": [m.label for m in spec.modes],
        "mode_parameters": {},
        "econ": {},
        "options": {"trip_time": spec.options.trip_time.value,
                    "carbon_cost": spec.options.carbon_cost.value},
    }
    for m in sorted(spec.mode_specs, key=lambda m: m.mode_id):
        d = {k: v for k, v in asdict(m).items() if k != "mode_id" and v is not None}
        doc["mode_parameters"][m.mode_id.label] = d
    econ = asdict(spec.econ)
    if isinstance(econ["emission_ceiling"], tuple):
        econ["emission_ceiling"] = [list(row) for row in econ["emission_ceiling"]]
    doc["econ"] = econ
    if spec.mode is PlanMode.HUB:
        doc["hub_nodes"] = [{"name": h.name or str(h.id), "latitude": h.location.latitude,
                             "longitude": h.location.longitude} for h in spec.hub_nodes]
        hub_name = {h.id: h.name or str(h.id) for h in spec.hub_nodes}
        doc["hub_assignment"] = {n.name or str(n.id): hub_name[spec.hub_assignment[n.id]]
                                 for n in spec.demand_nodes}
    if solver is not None:
        doc["solver"] = asdict(solver)
    if spec.provenance:
        doc["provenance"] = list(spec.provenance)
    return doc


def fingerprint(spec: ScenarioSpec, solver: MilpOptions | None = None) -> str:
    """Content hash of the semantically meaningful parts of a scenario."""
    doc = spec_to_document(spec, solver)
    doc.pop("provenance", None)
    doc.pop("name", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


BUILTIN_IDS = ("S1", "S2", "S3", "S4", "S5")


def builtin_document(scenario_id: str, periods: int | None = None) -> dict:
    """Scenario document for one of the five reference scenarios.

    S1, S4 and S5 use the proximal demand set, S2 and S3 the distant one.
    S2 runs at the low demand level, S4 takes two years per pipeline and S5
    routes through three demand-weighted K-means hubs.
    """
    sid = scenario_id.upper()
    if sid not in BUILTIN_IDS:
        raise ValidationError(f"unknown builtin scenario {scenario_id!r}; choose from {BUILTIN_IDS}")
    counties = load_counties()
    demand_set = "distant" if sid in ("S2", "S3") else "proximal"
    T = 26 if periods is None else int(periods)
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": sid if periods is None else f"{sid}-T{T}",
        "mode": "hub" if sid == "S5" else "direct",
        "horizon": {"start_year": 2025, "periods": T},
        "supply_nodes": [{"name": s["name"], "latitude": s["latitude"],
                          "longitude": s["longitude"], "share": s["share"]}
                         for s in counties["supply"]],
        "demand_nodes": [{"name": d["name"], "latitude": d["latitude"],
                          "longitude": d["longitude"], "population": d["population"],
                          "region": d["region"]}
                         for d in counties["demand_sets"][demand_set]],
        "forecast": {"base_year": counties["base_year"]},
        "econ": {"beta": PUBLISHED_BETA, "construction_gap": 2 if sid == "S4" else 1},
        "provenance": [f"county populations and coordinates from bundled data ({demand_set} set)"],
    }
    if sid == "S2":
        doc["forecast"]["demand_scale"] = LOW_DEMAND_RATIO
        doc["provenance"].append(f"forecast.demand_scale = {LOW_DEMAND_RATIO} (default low level)")
    if sid == "S5":
        doc["clustering"] = {"K": 3, "seed": 0, "weighted": True}
    return doc


def builtin_scenario(scenario_id: str, periods: int | None = None) -> ScenarioSpec:
    return resolve_document(builtin_document(scenario_id, periods)).spec


def with_demand_scale(spec: ScenarioSpec, factor: float, scale_supply: bool = True) -> ScenarioSpec:
    """Copy of ``spec`` with every demand (and optionally supply) series scaled."""
    from dataclasses import replace
    demand = tuple(replace(n, demand=tuple(factor * v for v in n.demand)) for n in spec.demand_nodes)
    supply = spec.supply_nodes
    econ = spec.econ
    if scale_supply:
        supply = tuple(replace(n, capacity=tuple(factor * v for v in n.capacity))
                       for n in spec.supply_nodes)
        peak = max(max(n.capacity) for n in supply)
        if econ.big_m < peak:
            econ = replace(econ, big_m=peak)
    return replace(spec, demand_nodes=demand, supply_nodes=supply, econ=econ)
