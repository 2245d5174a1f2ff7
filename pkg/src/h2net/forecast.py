"""County hydrogen demand projection and supply capacity allocation."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Mapping, Sequence

from .domain import ValidationError

# FCEV share of all vehicle sales in Texas, as a fraction.
TEXAS_FCEV_SHARE = (
    (2025, 0.00005),
    (2030, 0.024),
    (2035, 0.086),
    (2040, 0.186),
    (2045, 0.324),
    (2050, 0.50),
)

DEFAULT_GROWTH_RATE = 0.01
DEFAULT_HEADROOM = 0.05


@dataclass(frozen=True)
class FcevShareTable:
    anchors: tuple[tuple[float, float], ...] = TEXAS_FCEV_SHARE

    def __post_init__(self):
        anchors = tuple((float(y), float(k)) for y, k in self.anchors)
        if not anchors:
            raise ValidationError("share table needs at least one anchor")
        for (y0, k0), (y1, k1) in zip(anchors, anchors[1:]):
            if y1 <= y0:
                raise ValidationError("share table years must be strictly increasing")
            if k1 < k0:
                raise ValidationError("share table values must be non-decreasing")
        for _, k in anchors:
            if not 0.0 <= k <= 1.0:
                raise ValidationError(f"share {k} outside [0, 1]")
        object.__setattr__(self, "anchors", anchors)

    @property
    def first_year(self) -> float:
        return self.anchors[0][0]

    @property
    def last_year(self) -> float:
        return self.anchors[-1][0]


@dataclass(frozen=True)
class DemandModelParams:
    yearly_mileage: float = 22_954.0  # km per year
    commuter_ratio: float = 0.45
    fcev_efficiency: float = 0.01  # kg H2 per km
    combined_constant: float = 103.293  # kg per person-year at full adoption

    def __post_init__(self):
        product = self.yearly_mileage * self.commuter_ratio * self.fcev_efficiency
        if abs(product - self.combined_constant) > 1e-3:
            raise ValidationError(
                f"combined constant {self.combined_constant} inconsistent with "
                f"mileage x commuter ratio x efficiency = {product}")


def fcev_share(year: float, table: FcevShareTable = FcevShareTable()) -> float:
    """FCEV sales share at ``year``, linear between anchors."""
    years = [y for y, _ in table.anchors]
    if not years[0] <= year <= years[-1]:
        raise ValidationError(
            f"year {year} outside share table range [{years[0]:g}, {years[-1]:g}]")
    pos = bisect_right(years, year) - 1
    y0, k0 = table.anchors[pos]
    if year == y0 or pos == len(years) - 1:
        return k0
    y1, k1 = table.anchors[pos + 1]
    return k0 + (k1 - k0) * (year - y0) / (y1 - y0)


def hydrogen_demand(population: float, k: float,
                    params: DemandModelParams = DemandModelParams()) -> float:
    if population < 0:
        raise ValidationError("population must be non-negative")
    if not 0.0 <= k <= 1.0:
        raise ValidationError(f"FCEV share {k} outside [0, 1]")
    return population * k * params.combined_constant


def project_population(base: float, growth_rate: float, years_ahead: int) -> int:
    if base < 0:
        raise ValidationError("base population must be non-negative")
    if growth_rate <= -1:
        raise ValidationError("growth rate must exceed -1")
    return math.floor(base * (1.0 + growth_rate) ** years_ahead + 0.5)


def allocate_supply(total_demand: Sequence[float], proportions: Mapping[str, float],
                    headroom: float = DEFAULT_HEADROOM) -> dict[str, tuple[float, ...]]:
    """Per-supplier capacity series covering total demand plus headroom."""
    if abs(math.fsum(proportions.values()) - 1.0) > 1e-9:
        raise ValidationError(
            f"supply proportions sum to {math.fsum(proportions.values())}, expected 1")
    if headroom < 0:
        raise ValidationError("headroom must be non-negative")
    if any(p < 0 for p in proportions.values()):
        raise ValidationError("supply proportions must be non-negative")
    scale = 1.0 + headroom
    return {name: tuple(p * scale * d for d in total_demand)
            for name, p in proportions.items()}


def county_demand_series(population_base: float, base_year: int, years: Sequence[int],
                         growth_rate: float = DEFAULT_GROWTH_RATE,
                         table: FcevShareTable = FcevShareTable(),
                         params: DemandModelParams = DemandModelParams()) -> list[dict]:
    """Yearly rows of population, share and demand for one county."""
    rows = []
    for year in years:
        pop = project_population(population_base, growth_rate, year - base_year)
        k = fcev_share(year, table)
        rows.append({"year": year, "population": pop, "share": k,
                     "demand": hydrogen_demand(pop, k, params)})
    return rows
