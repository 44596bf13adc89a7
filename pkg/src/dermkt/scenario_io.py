"""Scenario JSON files and the seeded random scenario generator.

File layout::

    {
      "network": {
        "nodes": ["a", "b"],
        "lines": [
          {"from": "a", "to": "b", "capacity": 10.0, "direction": "both"},
          {"incidence": [1.0, -1.0], "capacity": 5.0}
        ]
      },
      "prosumers": [{"id": "p1", "node": "a", "capacity": 50.0, "z": 1000.0,
                     "utility": {"type": "isoelastic", "eta": 1.0}}],
      "generators": [{"id": "g1", "node": "b",
                      "cost": {"type": "quadratic", "alpha": 0.01, "beta": 1.0,
                               "y_min": 0.0, "y_max": 1000.0}}],
      "fixed_demand": [0.0, 100.0]
    }

A ``from``/``to`` line is the incidence row ``e_to - e_from``; ``direction``
``"both"`` adds the mirrored row ``e_from - e_to`` with the same capacity.
``fixed_demand`` may also be an object keyed by node id (missing nodes are 0).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .domain import Generator, Line, Network, Prosumer, Scenario, directed_line, validate
from .errors import ScenarioError
from .utility import COST_KINDS, UTILITY_KINDS, Isoelastic, Quadratic


def _fields(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ScenarioError(f"{where}: unknown field '{unknown[0]}'")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ScenarioError(f"{where}: missing field '{missing[0]}'")
    return obj


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _string(value, where):
    if not isinstance(value, str):
        raise ScenarioError(f"{where}: expected a string, got {value!r}")
    return value


def _node_index(ids, value, where):
    try:
        return ids.index(value)
    except ValueError:
        raise ScenarioError(f"{where}: unknown node id {value!r}") from None


def _utility(obj, where):
    kind = _fields(obj, where, ["type"], ["eta"]).get("type")
    if kind not in UTILITY_KINDS:
        raise ScenarioError(f"{where}.type: unknown utility type {kind!r}")
    _fields(obj, where, ["type", "eta"])
    return Isoelastic(eta=_number(obj["eta"], f"{where}.eta"))


def _cost(obj, where):
    kind = _fields(obj, where, ["type"], ["alpha", "beta", "y_min", "y_max"]).get("type")
    if kind not in COST_KINDS:
        raise ScenarioError(f"{where}.type: unknown cost type {kind!r}")
    _fields(obj, where, ["type", "alpha", "beta", "y_max"], ["y_min"])
    return Quadratic(
        alpha=_number(obj["alpha"], f"{where}.alpha"),
        beta=_number(obj["beta"], f"{where}.beta"),
        y_min=_number(obj.get("y_min", 0.0), f"{where}.y_min"),
        y_max=_number(obj["y_max"], f"{where}.y_max"),
    )


def scenario_from_dict(data) -> Scenario:
    """Build a scenario from parsed JSON; strict about field names and types.

    Does not run :func:`~dermkt.domain.validate`.
    """
    _fields(data, "scenario", ["network"], ["prosumers", "generators", "fixed_demand"])
    net = _fields(data["network"], "network", ["nodes"], ["lines"])
    ids = net["nodes"]
    if isinstance(ids, int) and not isinstance(ids, bool):
        ids = [str(i) for i in range(ids)]
    if not isinstance(ids, list) or not ids:
        raise ScenarioError("network.nodes: expected a non-empty list of node ids")
    ids = [_string(v, f"network.nodes[{i}]") for i, v in enumerate(ids)]
    n = len(ids)

    lines: list[Line] = []
    for k, obj in enumerate(net.get("lines", [])):
        where = f"network.lines[{k}]"
        if isinstance(obj, dict) and "incidence" in obj:
            _fields(obj, where, ["incidence", "capacity"])
            row = obj["incidence"]
            if not isinstance(row, list):
                raise ScenarioError(f"{where}.incidence: expected a list")
            row = tuple(_number(v, f"{where}.incidence[{i}]") for i, v in enumerate(row))
            lines.append(Line(row, _number(obj["capacity"], f"{where}.capacity")))
            continue
        _fields(obj, where, ["from", "to", "capacity"], ["direction"])
        src = _node_index(ids, obj["from"], f"{where}.from")
        dst = _node_index(ids, obj["to"], f"{where}.to")
        cap = _number(obj["capacity"], f"{where}.capacity")
        direction = obj.get("direction", "forward")
        if direction not in ("forward", "both"):
            raise ScenarioError(f"{where}.direction: expected 'forward' or 'both', got {direction!r}")
        lines.append(directed_line(n, src, dst, cap))
        if direction == "both":
            lines.append(directed_line(n, dst, src, cap))

    prosumers = []
    for k, obj in enumerate(data.get("prosumers", [])):
        where = f"prosumers[{k}]"
        _fields(obj, where, ["id", "node", "capacity", "z", "utility"])
        prosumers.append(
            Prosumer(
                id=_string(obj["id"], f"{where}.id"),
                node=_node_index(ids, obj["node"], f"{where}.node"),
                capacity=_number(obj["capacity"], f"{where}.capacity"),
                consumption_cap=_number(obj["z"], f"{where}.z"),
                utility=_utility(obj["utility"], f"{where}.utility"),
            )
        )

    generators = []
    for k, obj in enumerate(data.get("generators", [])):
        where = f"generators[{k}]"
        _fields(obj, where, ["id", "node", "cost"])
        generators.append(
            Generator(
                id=_string(obj["id"], f"{where}.id"),
                node=_node_index(ids, obj["node"], f"{where}.node"),
                cost=_cost(obj["cost"], f"{where}.cost"),
            )
        )

    raw = data.get("fixed_demand", [0.0] * n)
    if isinstance(raw, dict):
        for key in raw:
            _node_index(ids, key, "fixed_demand")
        demand = tuple(_number(raw.get(i, 0.0), f"fixed_demand.{i}") for i in ids)
    elif isinstance(raw, list):
        if len(raw) != n:
            raise ScenarioError(f"fixed_demand: expected {n} entries, got {len(raw)}")
        demand = tuple(_number(v, f"fixed_demand[{i}]") for i, v in enumerate(raw))
    else:
        raise ScenarioError("fixed_demand: expected a list or an object")

    return Scenario(
        network=Network(node_count=n, lines=tuple(lines), node_ids=tuple(ids)),
        prosumers=tuple(prosumers),
        generators=tuple(generators),
        fixed_demand=demand,
    )


def _line_to_dict(line: Line, ids) -> dict:
    row = list(line.incidence)
    plus = [i for i, v in enumerate(row) if v == 1.0]
    minus = [i for i, v in enumerate(row) if v == -1.0]
    if len(plus) == 1 and len(minus) == 1 and sum(1 for v in row if v != 0.0) == 2:
        return {"from": ids[minus[0]], "to": ids[plus[0]], "capacity": line.capacity, "direction": "forward"}
    return {"incidence": row, "capacity": line.capacity}


def scenario_to_dict(scenario: Scenario) -> dict:
    ids = list(scenario.network.node_ids)
    return {
        "network": {
            "nodes": ids,
            "lines": [_line_to_dict(ln, ids) for ln in scenario.network.lines],
        },
        "prosumers": [
            {
                "id": p.id,
                "node": ids[p.node],
                "capacity": p.capacity,
                "z": p.consumption_cap,
                "utility": {"type": p.utility.kind, "eta": p.utility.eta},
            }
            for p in scenario.prosumers
        ],
        "generators": [
            {
                "id": g.id,
                "node": ids[g.node],
                "cost": {
                    "type": g.cost.kind,
                    "alpha": g.cost.alpha,
                    "beta": g.cost.beta,
                    "y_min": g.cost.y_min,
                    "y_max": g.cost.y_max,
                },
            }
            for g in scenario.generators
        ],
        "fixed_demand": list(scenario.fixed_demand),
    }


def dumps_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(scenario), encoding="utf-8", newline="\n")


def loads_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises:
        ScenarioError: on malformed JSON, unknown or ill-typed fields, or
            validation failures (listed in ``.violations``).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    scenario = scenario_from_dict(data)
    violations = validate(scenario)
    if violations:
        raise ScenarioError("invalid scenario:\n  " + "\n  ".join(violations), violations)
    return scenario


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text(encoding="utf-8"))


def bundled_names() -> list[str]:
    """Names of the scenarios shipped with the package."""
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_scenario(name: str) -> Scenario:
    """Load a shipped scenario by name, e.g. ``"single_node"``."""
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in bundled_names():
        raise ScenarioError(f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}")
    text = (resources.files(__package__) / "scenarios" / f"{stem}.json").read_text(encoding="utf-8")
    return loads_scenario(text)


def resolve_scenario(arg: str) -> Scenario:
    """Load ``arg`` as a file path, or else as a bundled scenario name.

    The fallback matches on the file name alone, so ``examples/single_node.json``
    finds the bundled ``single_node`` scenario when no such file exists.
    """
    path = Path(arg)
    if path.is_file():
        return load_scenario(path)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    if stem in bundled_names():
        return bundled_scenario(stem)
    raise ScenarioError(f"{arg}: no such file or bundled scenario")


def random_scenario(seed: int, nodes: int = 3, prosumers: int = 4, generators: int = 2) -> Scenario:
    """Seeded random scenario that always passes validation and is feasible.

    Nodes form a chain joined by two-way lines. Fixed demand only sits at
    nodes that host a generator and never exceeds their local capacity, so
    zero net injection everywhere is feasible.
    """
    if nodes < 1 or generators < 1 or prosumers < 0:
        raise ValueError("need nodes >= 1, generators >= 1 and prosumers >= 0")
    rng = np.random.default_rng(seed)
    ids = [f"n{i}" for i in range(nodes)]
    lines: list[Line] = []
    for i in range(nodes - 1):
        cap = float(rng.uniform(0.0, 50.0))
        lines.append(directed_line(nodes, i, i + 1, cap))
        lines.append(directed_line(nodes, i + 1, i, cap))
    pros = []
    for k in range(prosumers):
        C = float(rng.uniform(0.0, 100.0))
        pros.append(
            Prosumer(
                id=f"p{k + 1}",
                node=int(rng.integers(nodes)),
                capacity=C,
                consumption_cap=C + 1000.0,
                utility=Isoelastic(eta=float(rng.uniform(0.5, 3.0))),
            )
        )
    gens = []
    local_cap = [0.0] * nodes
    for j in range(generators):
        node = int(rng.integers(nodes))
        y_max = float(rng.uniform(100.0, 1000.0))
        local_cap[node] += y_max
        gens.append(
            Generator(
                id=f"g{j + 1}",
                node=node,
                cost=Quadratic(
                    alpha=float(rng.uniform(0.005, 0.05)),
                    beta=float(rng.uniform(0.5, 2.0)),
                    y_min=0.0,
                    y_max=y_max,
                ),
            )
        )
    demand = tuple(
        float(min(rng.uniform(0.0, 50.0), local_cap[i])) if local_cap[i] > 0 else 0.0
        for i in range(nodes)
    )
    return Scenario(
        network=Network(node_count=nodes, lines=tuple(lines), node_ids=tuple(ids)),
        prosumers=tuple(pros),
        generators=tuple(gens),
        fixed_demand=demand,
    )
