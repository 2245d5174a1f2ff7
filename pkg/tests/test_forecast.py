from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from h2net.domain import ValidationError
from h2net.forecast import (TEXAS_FCEV_SHARE, DemandModelParams, FcevShareTable, allocate_supply,
                            county_demand_series, fcev_share, hydrogen_demand, project_population)

# FCEV share of all sales by year, as fractions, frozen from the published table
ANCHORS = {2025: 0.00005, 2030: 0.024, 2035: 0.086, 2040: 0.186, 2045: 0.324, 2050: 0.50}


@pytest.mark.parametrize("year,k", sorted(ANCHORS.items()))
def test_share_anchors_exact(year, k):
    assert fcev_share(year) == k


def test_share_interpolates_linearly():
    assert fcev_share(2027.5) == pytest.approx(0.012025, abs=1e-15)


@pytest.mark.parametrize("year", [2024, 2050.5])
def test_share_out_of_range(year):
    with pytest.raises(ValidationError):
        fcev_share(year)


@given(st.floats(2025, 2050), st.floats(2025, 2050))
def test_share_monotone(a, b):
    a, b = sorted((a, b))
    assert fcev_share(a) <= fcev_share(b)


def test_share_table_validation():
    with pytest.raises(ValidationError):
        FcevShareTable(((2030, 0.1), (2025, 0.2)))
    with pytest.raises(ValidationError):
        FcevShareTable(((2025, 0.2), (2030, 0.1)))
    with pytest.raises(ValidationError):
        FcevShareTable(((2025, 1.2),))
    assert FcevShareTable().anchors == tuple((float(y), k) for y, k in TEXAS_FCEV_SHARE)


def test_demand_examples():
    assert hydrogen_demand(1_000_000, 0.024) == pytest.approx(2_479_032, abs=1.0)
    assert hydrogen_demand(123_456, 0.0) == 0.0
    assert hydrogen_demand(0, 0.5) == 0.0


@given(st.floats(0, 1e7), st.floats(0, 0.5), st.floats(0.1, 2.0))
def test_demand_homogeneous(pop, k, lam):
    base = hydrogen_demand(pop, k)
    assert hydrogen_demand(lam * pop, k) == pytest.approx(lam * base, rel=1e-12, abs=1e-9)
    if k * lam <= 1:
        assert hydrogen_demand(pop, lam * k) == pytest.approx(lam * base, rel=1e-12, abs=1e-9)


def test_demand_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        hydrogen_demand(-1, 0.1)
    with pytest.raises(ValidationError):
        hydrogen_demand(1, 1.5)


def test_demand_params_consistency():
    p = DemandModelParams()
    assert abs(p.yearly_mileage * p.commuter_ratio * p.fcev_efficiency
               - p.combined_constant) <= 1e-3
    with pytest.raises(ValidationError):
        DemandModelParams(combined_constant=100.0)


def test_population_examples():
    assert project_population(100_000, 0.0, 10) == 100_000
    assert project_population(100_000, 0.01, 1) == 101_000
    assert project_population(100_000, 0.01, 2) == 102_010
    with pytest.raises(ValidationError):
        project_population(100, -1.0, 1)


def test_allocate_examples():
    out = allocate_supply([100.0], {"Harris": 0.6, "Nueces": 0.4}, 0.0)
    assert out == {"Harris": (60.0,), "Nueces": (40.0,)}
    assert allocate_supply([100.0], {"A": 1.0}, 0.05)["A"] == pytest.approx((105.0,))
    zero = allocate_supply([0.0, 0.0], {"A": 0.5, "B": 0.5}, 0.1)
    assert zero == {"A": (0.0, 0.0), "B": (0.0, 0.0)}


def test_allocate_rejects_bad_proportions():
    with pytest.raises(ValidationError):
        allocate_supply([1.0], {"A": 0.5, "B": 0.4})
    with pytest.raises(ValidationError):
        allocate_supply([1.0], {"A": 1.0}, headroom=-0.1)


@given(st.lists(st.floats(0, 1e8), min_size=1, max_size=8), st.floats(0, 0.5),
       st.floats(0.01, 0.99))
def test_allocate_covers_demand(demand, headroom, p):
    out = allocate_supply(demand, {"A": p, "B": 1 - p}, headroom)
    for t, d in enumerate(demand):
        total = out["A"][t] + out["B"][t]
        assert total == pytest.approx((1 + headroom) * d, rel=1e-6, abs=1e-9)
        assert out["A"][t] >= p * d - 1e-9 and out["B"][t] >= (1 - p) * d - 1e-9


def test_county_series_rows():
    rows = county_demand_series(1_000_000, 2024, [2030, 2031], growth_rate=0.0)
    assert rows[0] == {"year": 2030, "population": 1_000_000, "share": 0.024,
                       "demand": pytest.approx(2_479_032, abs=1.0)}
    assert rows[1]["share"] == pytest.approx(0.024 + (0.086 - 0.024) / 5)
    grown = county_demand_series(100_000, 2024, [2025, 2026], growth_rate=0.01)
    assert [r["population"] for r in grown] == [101_000, 102_010]
    assert all(math.isfinite(r["demand"]) for r in grown)
