"""Core types shared by every module: nodes, modes, economics and scenarios.

All types are frozen dataclasses. Series are stored as tuples so a
constructed scenario can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Mapping, Sequence

EARTH_RADIUS_KM = 6371.0


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class NodeKind(str, Enum):
    SUPPLY = "supply"
    DEMAND = "demand"
    HUB = "hub"


class ModeId(IntEnum):
    PIPELINE = 1
    TUBE_TRAILER = 2
    LIQUID_TRUCK = 3
    LOHC_TRAILER = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: "str | int | ModeId") -> "ModeId":
        if isinstance(value, ModeId):
            return value
        if isinstance(value, int):
            return cls(value)
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValidationError(f"unknown transport mode {value!r}") from None


class PlanMode(str, Enum):
    DIRECT = "direct"
    HUB = "hub"


@dataclass(frozen=True, order=True)
class NodeId:
    kind: NodeKind
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError(f"node index must be non-negative, got {self.index}")

    def __str__(self) -> str:
        return f"{self.kind.value}{self.index}"


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self):
        if not (-90.0 <= self.latitude <= 90.0):
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not (-180.0 <= self.longitude <= 180.0):
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class Horizon:
    start_year: int
    periods: int

    def __post_init__(self):
        if self.periods < 1:
            raise ValidationError(f"horizon needs at least one period, got {self.periods}")

    def year(self, t: int) -> int:
        return self.start_year + t

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(self.start_year + t for t in range(self.periods))


@dataclass(frozen=True)
class TransportModeSpec:
    """Physical and economic parameters of one transport method.

    For the pipeline, ``capital_cost`` is per km and the vehicle-only fields
    (availability, fuel economy, speed, load time, fuel price, wage) are unused
    and may be ``None``. ``capacity`` is still used by the loss term.
    """

    mode_id: ModeId
    capital_cost: float
    lifespan: int
    capacity: float
    loss_rate: float = 0.0
    emission_factor: float = 0.0
    availability_hours: float | None = None
    fuel_economy: float | None = None
    speed: float | None = None
    load_time: float | None = None
    fuel_price: float | None = None
    wage: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode_id", ModeId.parse(self.mode_id))
        positive = {"capital_cost": self.capital_cost, "lifespan": self.lifespan,
                    "capacity": self.capacity}
        if self.is_vehicle:
            positive.update(availability_hours=self.availability_hours,
                            fuel_economy=self.fuel_economy, speed=self.speed,
                            load_time=self.load_time, fuel_price=self.fuel_price,
                            wage=self.wage)
        for name, value in positive.items():
            if value is None or not (value > 0) or not math.isfinite(value):
                raise ValidationError(
                    f"{self.mode_id.label}.{name} must be a finite positive number, got {value!r}")
        for name in ("loss_rate", "emission_factor"):
            value = getattr(self, name)
            if not (value >= 0) or not math.isfinite(value):
                raise ValidationError(f"{self.mode_id.label}.{name} must be >= 0, got {value!r}")

    @property
    def is_vehicle(self) -> bool:
        return self.mode_id is not ModeId.PIPELINE


@dataclass(frozen=True)
class EconParams:
    """System-wide economic and policy parameters.

    ``emission_ceiling`` is ``None`` (unbounded), a scalar applied to every
    demand node and period, or a nested tuple indexed ``[j][t]``.
    ``hub_demand_pipeline_capital`` prices hub-to-demand pipelines; ``None``
    means the same per-km cost as every other pipeline.
    """

    beta: float
    pipeline_capital: float
    pipeline_maintenance: float
    loss_penalty: float
    co2_penalty: float
    imbalance_penalty: float
    big_m: float
    max_new_pipelines: int
    construction_gap: int
    base_flow_limit: float
    base_length: float
    emission_ceiling: float | tuple[tuple[float, ...], ...] | None = None
    hub_demand_pipeline_capital: float | None = None

    def __post_init__(self):
        if not (self.beta >= 0):
            raise ValidationError(f"discount rate must be >= 0, got {self.beta}")
        if self.construction_gap < 0:
            raise ValidationError(f"construction gap must be >= 0, got {self.construction_gap}")
        if self.max_new_pipelines < 0:
            raise ValidationError("max_new_pipelines must be >= 0")
        for name in ("base_flow_limit", "base_length", "big_m"):
            if not (getattr(self, name) > 0):
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("pipeline_capital", "pipeline_maintenance", "loss_penalty",
                     "co2_penalty", "imbalance_penalty"):
            if not (getattr(self, name) >= 0):
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        ceiling = self.emission_ceiling
        if isinstance(ceiling, list) or (isinstance(ceiling, tuple) and ceiling
                                         and isinstance(ceiling[0], list)):
            object.__setattr__(self, "emission_ceiling",
                               tuple(tuple(float(v) for v in row) for row in ceiling))

    @property
    def hub_demand_capital(self) -> float:
        if self.hub_demand_pipeline_capital is None:
            return self.pipeline_capital
        return self.hub_demand_pipeline_capital

    def ceiling(self, j: int, t: int) -> float:
        c = self.emission_ceiling
        if c is None:
            return math.inf
        if isinstance(c, (int, float)):
            return float(c)
        return c[j][t]


@dataclass(frozen=True)
class SupplyNode:
    id: NodeId
    location: GeoPoint
    capacity: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "capacity", tuple(float(v) for v in self.capacity))


@dataclass(frozen=True)
class DemandNode:
    id: NodeId
    location: GeoPoint
    demand: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "demand", tuple(float(v) for v in self.demand))


@dataclass(frozen=True)
class HubNode:
    id: NodeId
    location: GeoPoint
    name: str = ""


class TripTime(str, Enum):
    ROUND_TRIP = "round_trip"  # 2L/SP + LT, consistent with the labour cost term
    TYPESET = "typeset"  # 2L / (SP + LT)


class CarbonCost(str, Enum):
    LITERAL = "literal"  # fleet size times every arc length
    FLOW_APPORTIONED = "flow_apportioned"  # trips actually driven per arc


@dataclass(frozen=True)
class FormulationOptions:
    trip_time: TripTime = TripTime.ROUND_TRIP
    carbon_cost: CarbonCost = CarbonCost.LITERAL

    def __post_init__(self):
        object.__setattr__(self, "trip_time", TripTime(self.trip_time))
        object.__setattr__(self, "carbon_cost", CarbonCost(self.carbon_cost))


@dataclass(frozen=True)
class ScenarioSpec:
    mode: PlanMode
    horizon: Horizon
    supply_nodes: tuple[SupplyNode, ...]
    demand_nodes: tuple[DemandNode, ...]
    mode_specs: tuple[TransportModeSpec, ...]
    econ: EconParams
    hub_nodes: tuple[HubNode, ...] = ()
    hub_assignment: Mapping[NodeId, NodeId] | None = None
    options: FormulationOptions = field(default_factory=FormulationOptions)
    name: str = ""
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", PlanMode(self.mode))
        for attr in ("supply_nodes", "demand_nodes", "mode_specs", "hub_nodes", "provenance"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        if self.hub_assignment is not None:
            object.__setattr__(self, "hub_assignment", dict(self.hub_assignment))
        self._validate()

    def _validate(self):
        T = self.horizon.periods
        if not self.supply_nodes:
            raise ValidationError("scenario needs at least one supply node")
        _check_ids(self.supply_nodes, NodeKind.SUPPLY)
        _check_ids(self.demand_nodes, NodeKind.DEMAND)
        _check_ids(self.hub_nodes, NodeKind.HUB)
        for node in self.supply_nodes:
            _check_series(node.capacity, T, f"capacity of supply node {node.name or node.id}")
        for node in self.demand_nodes:
            _check_series(node.demand, T, f"demand of demand node {node.name or node.id}")

        ids = [m.mode_id for m in self.mode_specs]
        if not ids:
            raise ValidationError("scenario needs at least one transport mode")
        if len(set(ids)) != len(ids):
            raise ValidationError("transport modes must be unique")
        pipe = self.mode_spec(ModeId.PIPELINE)
        if pipe is not None and pipe.capital_cost != self.econ.pipeline_capital:
            raise ValidationError(
                "pipeline capital cost differs between the pipeline mode and econ parameters")

        if self.mode is PlanMode.HUB:
            if not self.hub_nodes:
                raise ValidationError("hub mode requires hub nodes")
            if self.hub_assignment is None:
                raise ValidationError("hub mode requires a hub assignment")
            if pipe is None:
                raise ValidationError("hub mode requires the pipeline mode (supply-to-hub stage)")
            demand_ids = {n.id for n in self.demand_nodes}
            hub_ids = {n.id for n in self.hub_nodes}
            for j, k in self.hub_assignment.items():
                if j not in demand_ids:
                    raise ValidationError(f"hub assignment references unknown demand node {j}")
                if k not in hub_ids:
                    raise ValidationError(f"hub assignment references unknown hub {k}")
            missing = demand_ids - set(self.hub_assignment)
            if missing:
                raise ValidationError(
                    "hub assignment is not total; unassigned: "
                    + ", ".join(str(j) for j in sorted(missing)))
        elif self.hub_nodes or self.hub_assignment:
            raise ValidationError("hub nodes are only valid in hub mode")

        max_supply = max((max(n.capacity) for n in self.supply_nodes), default=0.0)
        if self.econ.big_m < max_supply:
            raise ValidationError(
                f"big_m={self.econ.big_m} is smaller than the largest period supply {max_supply}")
        c = self.econ.emission_ceiling
        if isinstance(c, tuple):
            if len(c) != len(self.demand_nodes) or any(len(row) != T for row in c):
                raise ValidationError("emission ceiling matrix must be |J| x T")

    def mode_spec(self, mode_id: ModeId) -> TransportModeSpec | None:
        for m in self.mode_specs:
            if m.mode_id == mode_id:
                return m
        return None

    @property
    def modes(self) -> tuple[ModeId, ...]:
        return tuple(sorted(m.mode_id for m in self.mode_specs))

    @property
    def vehicle_modes(self) -> tuple[ModeId, ...]:
        return tuple(r for r in self.modes if r is not ModeId.PIPELINE)

    @property
    def periods(self) -> int:
        return self.horizon.periods


def _check_ids(nodes: Sequence, kind: NodeKind):
    seen = set()
    for node in nodes:
        if node.id.kind is not kind:
            raise ValidationError(f"node {node.id} listed as {kind.value}")
        if node.id.index in seen:
            raise ValidationError(f"duplicate {kind.value} index {node.id.index}")
        seen.add(node.id.index)


def _check_series(series: Sequence[float], periods: int, what: str):
    if len(series) != periods:
        raise ValidationError(f"{what}: expected {periods} values, got {len(series)}")
    for t, value in enumerate(series):
        if not math.isfinite(value) or value < 0:
            raise ValidationError(f"{what}: negative or non-finite value {value} at period {t}")


def straight_line_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km (haversine, fixed Earth radius)."""
    phi1, phi2 = math.radians(a.latitude), math.radians(b.latitude)
    dphi = phi2 - phi1
    dlam = math.radians(b.longitude - a.longitude)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def present_value_factor(beta: float, t: int) -> float:
    if beta < 0 or t < 0:
        raise ValidationError("present_value_factor needs beta >= 0 and t >= 0")
    return 1.0 / (1.0 + beta) ** t
