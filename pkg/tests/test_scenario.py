from __future__ import annotations

import copy
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from h2net.domain import ModeId, PlanMode, ValidationError, present_value_factor
from h2net.scenario import (LOW_DEMAND_RATIO, builtin_document, builtin_scenario, fingerprint,
                            load_scenario, load_scenario_file, resolve_document,
                            spec_to_document, with_demand_scale)


def minimal_doc():
    return {"schema_version": 1, "mode": "direct",
            "horizon": {"start_year": 2025, "periods": 2},
            "supply_nodes": [{"name": "A", "latitude": 29.8, "longitude": -95.4,
                              "capacity": [300.0, 300.0]}],
            "demand_nodes": [{"name": "B", "latitude": 30.3, "longitude": -97.7,
                              "demand": [100.0, 200.0]}]}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def defaulted(spec):
    return [p for p in spec.provenance if p.endswith("(default)")]


def test_minimal_file_logs_defaults(tmp_path):
    spec = load_scenario(write(tmp_path, minimal_doc()))
    assert spec.horizon.periods == 2
    logged = " ".join(defaulted(spec))
    for key in ("loss_penalty", "co2_penalty", "imbalance_penalty", "max_new_pipelines",
                "base_flow_limit", "base_length"):
        assert f"econ.{key}" in logged
    assert spec.econ.loss_penalty == 10.0
    assert spec.econ.co2_penalty == 0.05
    assert spec.econ.imbalance_penalty == 100.0
    assert spec.econ.max_new_pipelines == 5
    assert spec.econ.base_flow_limit == 5e7
    assert spec.econ.base_length == 100.0


def test_negative_demand_names_node_and_period(tmp_path):
    doc = minimal_doc()
    doc["demand_nodes"][0]["demand"] = [100.0, -5.0]
    with pytest.raises(ValidationError, match=r"\(B\).*period 1"):
        load_scenario(write(tmp_path, doc))


def test_discount_override_reaches_present_value(tmp_path):
    doc = minimal_doc()
    doc["econ"] = {"beta": 0.05}
    spec = load_scenario(write(tmp_path, doc))
    assert spec.econ.beta == 0.05
    assert round(present_value_factor(spec.econ.beta, 1), 6) == 0.952381


def test_every_schema_violation_is_listed():
    doc = minimal_doc()
    doc["bogus"] = 1
    doc["horizon"]["pers"] = 3
    del doc["mode"]
    with pytest.raises(ValidationError) as info:
        resolve_document(doc)
    text = str(info.value)
    assert "'bogus' was unexpected" in text
    assert "horizon: " in text and "'pers' was unexpected" in text
    assert "'mode' is a required property" in text


def test_unreadable_or_malformed_file(tmp_path):
    with pytest.raises(ValidationError):
        load_scenario(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_scenario(p)


def test_fully_specified_document_needs_no_defaults():
    resolved = resolve_document(minimal_doc())
    doc = spec_to_document(resolved.spec, resolved.solver)
    doc.pop("provenance")
    again = resolve_document(doc)
    assert defaulted(again.spec) == []
    assert fingerprint(again.spec) == fingerprint(resolved.spec)


def test_fingerprint_ignores_key_order_and_tracks_content():
    doc = minimal_doc()
    a = fingerprint(resolve_document(doc).spec)
    shuffled = json.loads(json.dumps(doc, sort_keys=True))
    shuffled = dict(reversed(list(shuffled.items())))
    assert fingerprint(resolve_document(shuffled).spec) == a
    changed = copy.deepcopy(doc)
    changed["demand_nodes"][0]["demand"][1] = 201.0
    assert fingerprint(resolve_document(changed).spec) != a


@settings(max_examples=20, deadline=None)
@given(st.randoms(use_true_random=False))
def test_fingerprint_stable_under_reordering(rnd: random.Random):
    doc = minimal_doc()
    doc["econ"] = {"beta": 0.07, "loss_penalty": 3.0, "max_new_pipelines": 2}

    def shuffle(obj):
        if isinstance(obj, dict):
            items = list(obj.items())
            rnd.shuffle(items)
            return {k: shuffle(v) for k, v in items}
        if isinstance(obj, list):
            return [shuffle(v) for v in obj]
        return obj

    assert fingerprint(resolve_document(shuffle(doc)).spec) == \
        fingerprint(resolve_document(doc).spec)


def test_builtin_variants():
    s1, s2, s3, s4, s5 = (builtin_scenario(k, periods=3) for k in ("S1", "S2", "S3", "S4", "S5"))
    assert s4.econ.construction_gap == 2
    for s in (s1, s2, s3, s5):
        assert s.econ.construction_gap == 1
    assert s5.mode is PlanMode.HUB and len(s5.hub_nodes) == 3
    assert len(s5.hub_assignment) == 12
    pipe = next(m for m in s1.mode_specs if m.mode_id is ModeId.PIPELINE)
    assert pipe.capital_cost == 1735904.0
    assert s1.econ.pipeline_capital == 1735904.0
    near = {n.name for n in s1.demand_nodes}
    far = {n.name for n in s2.demand_nodes}
    assert len(near) == len(far) == 12 and near.isdisjoint(far)
    assert {n.name for n in s4.demand_nodes} == near == {n.name for n in s5.demand_nodes}
    assert {n.name for n in s3.demand_nodes} == far
    # S2 is the low-demand twin of S3
    for lo, hi in zip(s2.demand_nodes, s3.demand_nodes):
        for a, b in zip(lo.demand, hi.demand):
            assert a == pytest.approx(LOW_DEMAND_RATIO * b, rel=1e-12)
    assert [n.name for n in s1.supply_nodes] and len(s1.supply_nodes) == 2
    cap = [sum(n.capacity) for n in s1.supply_nodes]
    assert cap[0] / sum(cap) == pytest.approx(0.6)


def test_builtin_unknown_id():
    with pytest.raises(ValidationError):
        builtin_document("S9")


def test_builtin_horizon_shortening():
    assert builtin_scenario("S1", periods=6).horizon.periods == 6
    assert builtin_scenario("S1").horizon.periods == 26


def test_demand_scaling_helper():
    s = builtin_scenario("S1", periods=2)
    d = with_demand_scale(s, 2.0)
    assert d.demand_nodes[0].demand[1] == 2.0 * s.demand_nodes[0].demand[1]
    assert d.supply_nodes[0].capacity[1] == 2.0 * s.supply_nodes[0].capacity[1]


def test_file_loader_keeps_solver_options(tmp_path):
    doc = minimal_doc()
    doc["solver"] = {"node_limit": 7}
    resolved = load_scenario_file(write(tmp_path, doc))
    assert resolved.solver.node_limit == 7
