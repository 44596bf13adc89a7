"""Market data model: network, prosumers, generators and scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .utility import CostSpec, UtilitySpec, cost_violations, utility_violations


@dataclass(frozen=True)
class Line:
    """One row of the line-to-node incidence matrix and its capacity.

    The network constraint is one-sided, ``incidence . h <= capacity``.
    """

    incidence: tuple[float, ...]
    capacity: float


@dataclass(frozen=True)
class Network:
    node_count: int
    lines: tuple[Line, ...] = ()
    node_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if not self.node_ids:
            ids = tuple(str(i) for i in range(max(int(self.node_count), 0)))
            object.__setattr__(self, "node_ids", ids)
        else:
            object.__setattr__(self, "node_ids", tuple(self.node_ids))

    @property
    def B(self) -> np.ndarray:
        """Incidence matrix, shape ``(len(lines), node_count)``."""
        if not self.lines:
            return np.zeros((0, self.node_count))
        return np.array([ln.incidence for ln in self.lines], dtype=float)

    @property
    def f(self) -> np.ndarray:
        return np.array([ln.capacity for ln in self.lines], dtype=float)

    @classmethod
    def copper_plate(cls, node_count: int = 1) -> "Network":
        return cls(node_count=node_count)


def directed_line(node_count: int, src: int, dst: int, capacity: float) -> Line:
    """Line with incidence ``h[dst] - h[src] <= capacity``."""
    row = [0.0] * node_count
    row[dst] += 1.0
    row[src] -= 1.0
    return Line(tuple(row), float(capacity))


@dataclass(frozen=True)
class Prosumer:
    id: str
    node: int
    capacity: float
    consumption_cap: float
    utility: UtilitySpec


@dataclass(frozen=True)
class Generator:
    id: str
    node: int
    cost: CostSpec


@dataclass(frozen=True)
class ProsumerResponse:
    """Energy a prosumer sells (``sell``) and buys (``buy``)."""

    sell: float
    buy: float

    @property
    def net(self) -> float:
        return self.sell - self.buy


@dataclass(frozen=True)
class TwoPartPrice:
    """Participation fee plus per-unit price offered to one prosumer."""

    participation_fee: float
    marginal_price: float


@dataclass(frozen=True)
class Scenario:
    network: Network
    prosumers: tuple[Prosumer, ...] = ()
    generators: tuple[Generator, ...] = ()
    fixed_demand: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "prosumers", tuple(self.prosumers))
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(self.fixed_demand) == 0:
            demand = (0.0,) * self.network.node_count
        else:
            demand = tuple(float(v) for v in self.fixed_demand)
        object.__setattr__(self, "fixed_demand", demand)

    @property
    def node_count(self) -> int:
        return self.network.node_count

    def with_capacity(self, capacity: float) -> "Scenario":
        """Copy with every prosumer's DER capacity set to ``capacity``."""
        prosumers = tuple(replace(p, capacity=float(capacity)) for p in self.prosumers)
        return replace(self, prosumers=prosumers)


def validate(scenario: Scenario) -> list[str]:
    """Return one message per violated invariant; empty when valid.

    Order: network (nodes, then lines by index), prosumers and generators
    sorted by id, fixed demand by node, then scenario-wide checks.
    """
    out: list[str] = []
    net = scenario.network
    n = net.node_count
    if not (isinstance(n, int) and n >= 1):
        out.append(f"network: node_count must be a positive integer, got {n!r}")
        n = 0
    if len(net.node_ids) != n:
        out.append(f"network: expected {n} node ids, got {len(net.node_ids)}")
    elif len(set(net.node_ids)) != n:
        out.append("network: node ids must be unique")
    for k, line in enumerate(net.lines):
        if len(line.incidence) != n:
            out.append(f"line {k}: incidence row has {len(line.incidence)} entries, expected {n}")
        elif not all(math.isfinite(v) for v in line.incidence):
            out.append(f"line {k}: incidence entries must be finite")
        if not math.isfinite(line.capacity):
            out.append(f"line {k}: capacity must be finite")
        elif line.capacity < 0:
            out.append(f"line {k}: capacity must be ≥ 0")

    def node_ok(agent):
        return isinstance(agent.node, int) and 0 <= agent.node < n

    ids = [p.id for p in scenario.prosumers] + [g.id for g in scenario.generators]
    seen = set()
    for agent_id in sorted(ids):
        if agent_id in seen:
            out.append(f"agent {agent_id}: id is not unique")
        seen.add(agent_id)

    for p in sorted(scenario.prosumers, key=lambda a: a.id):
        tag = f"prosumer {p.id}"
        if not node_ok(p):
            out.append(f"{tag}: node {p.node!r} out of range")
        C, Z = p.capacity, p.consumption_cap
        if not (math.isfinite(C) and math.isfinite(Z)):
            out.append(f"{tag}: C and Z must be finite")
        else:
            if C < 0:
                out.append(f"{tag}: C must be ≥ 0")
            if not Z > C:
                out.append(f"{tag}: Z must exceed C")
        out.extend(f"{tag}: {msg}" for msg in utility_violations(p.utility))

    for g in sorted(scenario.generators, key=lambda a: a.id):
        tag = f"generator {g.id}"
        if not node_ok(g):
            out.append(f"{tag}: node {g.node!r} out of range")
        out.extend(f"{tag}: {msg}" for msg in cost_violations(g.cost))

    demand = scenario.fixed_demand
    if len(demand) != n:
        out.append(f"fixed_demand: expected {n} entries, got {len(demand)}")
    for i, v in enumerate(demand):
        if not (math.isfinite(v) and v >= 0):
            out.append(f"fixed_demand {i}: must be finite and ≥ 0, got {v}")

    if not scenario.generators and sum(demand) > 0:
        out.append("scenario: fixed demand is positive but there are no generators")
    return out
