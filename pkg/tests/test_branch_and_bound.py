from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h2net.model import GE, LE
from h2net.solver import MilpOptions, MilpStatus, solve_milp

from instances import lp_model


def knapsack(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    w = rng.integers(1, 10, n).astype(float)
    v = rng.integers(1, 12, n).astype(float)
    cap = float(np.floor(w.sum() / 2))
    model = lp_model(-v, rows=[(list(w), LE, cap)], bounds=[(0.0, 1.0)] * n,
                     integer=[True] * n)
    best = min(-float(v @ np.array(p)) for p in itertools.product((0, 1), repeat=n)
               if float(w @ np.array(p)) <= cap)
    return model, best


def test_single_rounding():
    model = lp_model([1.0], rows=[([1.0], GE, 1.5)], integer=[True])
    res = solve_milp(model)
    assert res.status is MilpStatus.OPTIMAL
    assert res.x[0] == 2.0
    assert res.objective == 2.0


def test_integral_relaxation_needs_no_branching():
    model = lp_model([1.0, 2.0], rows=[([1.0, 1.0], GE, 3.0)], bounds=[(0.0, 10.0)] * 2,
                     integer=[True, True])
    res = solve_milp(model)
    assert res.status is MilpStatus.OPTIMAL
    assert res.nodes == 0
    assert res.objective == pytest.approx(3.0)


def test_no_integer_point_is_infeasible():
    model = lp_model([1.0], bounds=[(0.2, 0.8)], integer=[True])
    assert solve_milp(model).status is MilpStatus.INFEASIBLE


def test_unbounded_relaxation():
    model = lp_model([-1.0], integer=[True])
    assert solve_milp(model).status is MilpStatus.UNBOUNDED


def test_node_limit_reports_partial_result():
    model, _ = knapsack(5)
    res = solve_milp(model, MilpOptions(node_limit=0))
    assert res.status in (MilpStatus.NODE_LIMIT, MilpStatus.OPTIMAL)
    assert res.nodes == 0
    if res.status is MilpStatus.NODE_LIMIT and res.has_incumbent:
        assert res.objective >= res.best_bound - 1e-9


def test_options_reject_nonpositive_tolerances():
    with pytest.raises(ValueError):
        MilpOptions(integer_tolerance=0.0)
    with pytest.raises(ValueError):
        MilpOptions(relative_gap=-1.0)
    with pytest.raises(ValueError):
        MilpOptions(node_limit=-1)


def test_branching_skips_implied_columns():
    from dataclasses import replace
    # y mirrors x through an equality; only x is a branching column
    model = lp_model([1.0, 0.0], rows=[([1.0], GE, 1.5), ([1.0, -1.0], "E", 0.0)],
                     integer=[True, True])
    model = replace(model, implied=np.array([False, True]))
    res = solve_milp(model)
    assert res.status is MilpStatus.OPTIMAL
    np.testing.assert_array_equal(res.x, [2.0, 2.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_knapsack_matches_enumeration(seed):
    model, best = knapsack(seed)
    res = solve_milp(model)
    assert res.status is MilpStatus.OPTIMAL
    assert res.objective == pytest.approx(best, abs=1e-6)
    # incumbent feasibility and integrality
    x = res.x
    assert np.all(np.abs(x - np.round(x)) <= 1e-6)
    assert np.all(model.A @ x <= model.rhs + 1e-6)
    # best bound is non-decreasing over nodes
    h = np.array(res.bound_history)
    assert np.all(np.diff(h) >= -1e-9)
    assert res.objective >= res.best_bound - 1e-6 * max(1.0, abs(res.objective))


def test_repeat_solves_are_identical():
    model, _ = knapsack(42)
    a = solve_milp(model)
    b = solve_milp(model)
    assert a.status is b.status
    assert a.x.tobytes() == b.x.tobytes()
    assert (a.objective, a.best_bound, a.nodes, a.bound_history) == \
        (b.objective, b.best_bound, b.nodes, b.bound_history)
