import dataclasses
import json

import pytest
from hypothesis import given, settings, strategies as st

from builders import prosumer, single_node
from dermkt.domain import Line, Network, Scenario, directed_line, validate
from dermkt.errors import ScenarioError
from dermkt.scenario_io import (
    bundled_names,
    bundled_scenario,
    dumps_scenario,
    load_scenario,
    loads_scenario,
    random_scenario,
    resolve_scenario,
    save_scenario,
    scenario_to_dict,
)


def test_reference_scenario_is_valid():
    assert validate(single_node()) == []


def test_z_must_exceed_c():
    sc = dataclasses.replace(single_node(), prosumers=(prosumer(50.0, Z=50.0),))
    assert validate(sc) == ["prosumer p1: Z must exceed C"]


def test_negative_line_capacity():
    sc = Scenario(Network(2, (Line((1.0, -1.0), -1.0),)), fixed_demand=(0.0, 0.0))
    assert validate(sc) == ["line 0: capacity must be ≥ 0"]


def test_validate_is_pure():
    sc = dataclasses.replace(single_node(), fixed_demand=(-1.0,))
    assert validate(sc) == validate(sc)
    assert len(validate(sc)) == 1


def test_violations_are_ordered():
    sc = Scenario(
        Network(1, (Line((1.0, 2.0), 1.0),)),
        (prosumer(5.0, Z=1.0, pid="b"), prosumer(-1.0, eta=0.0, pid="a")),
        (),
        (10.0,),
    )
    msgs = validate(sc)
    assert msgs[0].startswith("line 0")
    assert [m.split(":")[0] for m in msgs[1:4]] == ["prosumer a"] * 2 + ["prosumer b"]
    assert msgs[-1] == "scenario: fixed demand is positive but there are no generators"


def test_directed_line_row():
    assert directed_line(3, 0, 2, 5.0) == Line((-1.0, 0.0, 1.0), 5.0)


def test_domain_values_are_frozen():
    sc = single_node()
    with pytest.raises(dataclasses.FrozenInstanceError):
        sc.fixed_demand = (1.0,)
    with pytest.raises(dataclasses.FrozenInstanceError):
        sc.prosumers[0].capacity = 1.0


def test_with_capacity_copies():
    sc = single_node(C=50.0, count=2)
    other = sc.with_capacity(7.0)
    assert [p.capacity for p in other.prosumers] == [7.0, 7.0]
    assert sc.prosumers[0].capacity == 50.0


def test_network_matrices():
    net = Network(2, (directed_line(2, 0, 1, 3.0), directed_line(2, 1, 0, 4.0)))
    assert net.B.tolist() == [[-1.0, 1.0], [1.0, -1.0]]
    assert net.f.tolist() == [3.0, 4.0]
    assert Network.copper_plate(3).B.shape == (0, 3)


# scenario files


def test_bundled_reference_scenario():
    assert "single_node" in bundled_names()
    sc = bundled_scenario("single_node")
    ref = single_node()
    assert (sc.prosumers, sc.generators, sc.fixed_demand) == (ref.prosumers, ref.generators, ref.fixed_demand)


def test_resolve_falls_back_to_bundled_name(tmp_path):
    assert resolve_scenario("examples/single_node.json") == bundled_scenario("single_node")
    path = tmp_path / "mine.json"
    save_scenario(single_node(C=3.0), path)
    assert resolve_scenario(str(path)).prosumers[0].capacity == 3.0
    with pytest.raises(ScenarioError):
        resolve_scenario(str(tmp_path / "missing.json"))


def _reference_dict():
    return scenario_to_dict(single_node())


def test_unknown_field_is_named():
    data = _reference_dict()
    data["prosumers"][0]["colour"] = "red"
    with pytest.raises(ScenarioError, match="prosumers\\[0\\]: unknown field 'colour'"):
        loads_scenario(json.dumps(data))


def test_zero_eta_fails_validation():
    data = _reference_dict()
    data["prosumers"][0]["utility"]["eta"] = 0.0
    with pytest.raises(ScenarioError) as info:
        loads_scenario(json.dumps(data))
    assert any("strict concavity" in v for v in info.value.violations)


def test_bad_json_reports_position():
    with pytest.raises(ScenarioError, match="line 2, column"):
        loads_scenario('{\n  "network": ,\n}')


def test_wrong_type_reports_path():
    data = _reference_dict()
    data["generators"][0]["cost"]["alpha"] = "cheap"
    with pytest.raises(ScenarioError, match="generators\\[0\\].cost.alpha"):
        loads_scenario(json.dumps(data))


def test_from_to_lines_and_keyed_demand():
    text = json.dumps(
        {
            "network": {
                "nodes": ["a", "b"],
                "lines": [{"from": "a", "to": "b", "capacity": 2.0, "direction": "both"}],
            },
            "generators": [
                {"id": "g", "node": "a", "cost": {"type": "quadratic", "alpha": 1.0, "beta": 0.0, "y_max": 9.0}}
            ],
            "fixed_demand": {"b": 1.5},
        }
    )
    sc = loads_scenario(text)
    assert sc.network.B.tolist() == [[-1.0, 1.0], [1.0, -1.0]]
    assert sc.fixed_demand == (0.0, 1.5)


def test_round_trip_is_value_identical(tmp_path):
    for name in bundled_names():
        sc = bundled_scenario(name)
        path = tmp_path / f"{name}.json"
        save_scenario(sc, path)
        assert load_scenario(path) == sc


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), nodes=st.integers(1, 4), pros=st.integers(0, 5), gens=st.integers(1, 3))
def test_random_scenarios_validate_and_round_trip(seed, nodes, pros, gens):
    sc = random_scenario(seed, nodes, pros, gens)
    assert validate(sc) == []
    assert loads_scenario(dumps_scenario(sc)) == sc
    for p in sc.prosumers:
        assert 0.0 <= p.capacity <= 100.0
        assert p.consumption_cap == p.capacity + 1000.0
        assert 0.5 <= p.utility.eta <= 3.0
    for g in sc.generators:
        assert 0.005 <= g.cost.alpha <= 0.05 and 0.5 <= g.cost.beta <= 2.0
    assert all(0.0 <= ln.capacity <= 50.0 for ln in sc.network.lines)


def test_random_scenario_is_deterministic():
    assert dumps_scenario(random_scenario(11)) == dumps_scenario(random_scenario(11))
    assert dumps_scenario(random_scenario(11)) != dumps_scenario(random_scenario(12))
    assert len(random_scenario(5, nodes=3).network.lines) >= 2
