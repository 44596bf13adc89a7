"""One-part pricing counterfactual, welfare decomposition and PoAg.

PoAg (price of aggregation) is the ratio of the one-part market's induced
cost to the efficient market's cost.

Under one-part pricing the aggregator offers only a per-unit price ``p``.
For a single prosumer with isoelastic utility the aggregator's optimum
solves ``(1 - eta) p + eta C p**(1 + 1/eta) = lam`` and the prosumer sells
``C - p**(-1/eta)``. Seen from the operator this is a supply curve with
inverse

    p_A(x) = (1 - eta)(C - x)**-eta + eta C (C - x)**(-eta - 1),

whose integral from 0 to ``x`` is ``x (C - x)**-eta``. The single-node
market clears against that curve instead of the prosumer's true marginal
utility, which is where the efficiency loss comes from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import agents
from .dispatch import DEFAULT_TOL, DispatchSolution, solve_benchmark
from .domain import Scenario, TwoPartPrice
from .errors import ConfigurationError, DomainError, InfeasibleError
from .roots import bisect
from .utility import Isoelastic, c_marginal, c_value, u_value

NORMALIZATIONS = ("opportunity", "literal")


@dataclass(frozen=True)
class OnePartEquilibrium:
    marginal_price: float
    sell: float
    aggregator_profit: float
    wholesale_price: float
    trade_occurs: bool


@dataclass(frozen=True)
class OnePartOutcome:
    """Dispatch under one-part pricing and its induced cost ``C_O``."""

    solution: DispatchSolution
    cost: float
    equilibrium: OnePartEquilibrium


@dataclass(frozen=True)
class WelfareDecomposition:
    prosumer_surplus: float
    aggregator_surplus: float
    generator_surplus: float
    merchandising_surplus: float
    total: float

    @property
    def component_sum(self) -> float:
        return (
            self.prosumer_surplus
            + self.aggregator_surplus
            + self.generator_surplus
            + self.merchandising_surplus
        )


@dataclass(frozen=True)
class PoAgResult:
    cost_onepart: float
    cost_efficient: float
    poag: float
    normalization: str


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value}")


def fixed_point_residual(p: float, capacity: float, eta: float, lam: float) -> float:
    """``(1 - eta) p + eta C p**(1 + 1/eta) - lam``; increasing in ``p`` where trade occurs."""
    return (1.0 - eta) * p + eta * capacity * p ** (1.0 + 1.0 / eta) - lam


def one_part_price(capacity: float, eta: float, lam: float, method: str = "auto") -> OnePartEquilibrium:
    """Aggregator's profit-maximising per-unit price for one prosumer.

    With ``method="auto"`` the logarithmic case uses ``p = sqrt(lam / C)``
    and other ``eta`` bisect the first-order condition on
    ``[C**-eta, lam]``; ``method="bisect"`` always bisects. When
    ``C <= lam**(-1/eta)`` the prosumer would not sell at any ``p <= lam``;
    the result then reports ``p = lam`` and zero sales.
    """
    _positive("capacity", capacity)
    _positive("eta", eta)
    _positive("wholesale price", lam)
    if method not in ("auto", "bisect"):
        raise ValueError(f"unknown method {method!r}")
    if capacity * lam ** (1.0 / eta) <= 1.0:
        return OnePartEquilibrium(lam, 0.0, 0.0, lam, False)
    if eta == 1.0 and method == "auto":
        p = math.sqrt(lam / capacity)
    else:
        p = bisect(lambda q: fixed_point_residual(q, capacity, eta, lam), capacity ** (-eta), lam)
    x = capacity - p ** (-1.0 / eta)
    return OnePartEquilibrium(p, x, (lam - p) * x, lam, x > 0)


def induced_inverse_supply(x: float, capacity: float, eta: float) -> float:
    """Wholesale price at which the one-part prosumer supplies ``x``.

    Raises:
        DomainError: unless ``0 <= x < capacity``.
    """
    _positive("eta", eta)
    if not 0 <= x < capacity:
        raise DomainError(f"need 0 <= x < C, got x={x}, C={capacity}")
    rest = capacity - x
    if eta == 1.0:
        return capacity / (rest * rest)
    return (1.0 - eta) * rest ** (-eta) + eta * capacity * rest ** (-eta - 1.0)


def induced_cost(x: float, capacity: float, eta: float) -> float:
    """Area under :func:`induced_inverse_supply` from 0 to ``x``: ``x (C - x)**-eta``."""
    if x == 0:
        return 0.0
    if not 0 < x < capacity:
        raise DomainError(f"need 0 <= x < C, got x={x}, C={capacity}")
    return x * (capacity - x) ** (-eta)


def _single_node_parts(scenario: Scenario):
    if scenario.node_count != 1 or len(scenario.prosumers) != 1 or len(scenario.generators) != 1:
        raise ConfigurationError(
            "one-part pricing is defined for one node, one prosumer and one generator"
        )
    demand = scenario.fixed_demand[0]
    if not demand > 0:
        raise ConfigurationError("one-part pricing needs positive fixed demand")
    prosumer = scenario.prosumers[0]
    if not isinstance(prosumer.utility, Isoelastic):
        raise ConfigurationError("one-part pricing needs an isoelastic utility")
    return prosumer, scenario.generators[0], demand


def _one_part_reply(prosumer, lam: float):
    """(sell, buy, equilibrium) of the one-part game at wholesale price ``lam``."""
    C, Z, eta = prosumer.capacity, prosumer.consumption_cap, prosumer.utility.eta
    if C > 0:
        eq = one_part_price(C, eta, lam)
        if eq.trade_occurs:
            return eq.sell, 0.0, eq
    else:
        eq = OnePartEquilibrium(lam, 0.0, 0.0, lam, False)
    z = min(lam ** (-1.0 / eta), Z)
    return 0.0, max(z - C, 0.0), eq


def _solution(scenario, prosumer, gen, sell, buy, y, lam) -> DispatchSolution:
    z = prosumer.capacity - sell + buy
    h = scenario.fixed_demand[0] + buy - sell - y
    return DispatchSolution(
        model="one_part",
        sell=np.array([sell]),
        buy=np.array([buy]),
        generation=np.array([y]),
        net_injection=np.array([0.0]),
        nodal_price=np.array([lam]),
        line_multiplier=np.zeros(0),
        balance_residual=abs(h),
        # zero consumption only arises without elastic demand and C = 0
        welfare=(u_value(prosumer.utility, z) if z > 0 else -math.inf) - c_value(gen.cost, y),
        system_price=lam,
    )


def solve_one_part(scenario: Scenario, tol: float = DEFAULT_TOL, elastic_demand: bool = True) -> OnePartOutcome:
    """Clear a single-node market against the one-part induced supply curve.

    By default the prosumer keeps its wholesale demand response: when the
    aggregator cannot profitably buy, the prosumer buys ``[z1 - C]^+`` at the
    clearing price just as without DER participation. The clearing price is
    bisected on total imbalance. ``elastic_demand=False`` drops that
    response and minimises ``c(Dbar - x) + x (C - x)**-eta`` over ``x`` by
    bisecting its derivative; with ``C = 0`` the prosumer then consumes
    nothing and the reported welfare is ``-inf``.

    The returned cost is ``c(y) + x (C - x)**-eta - [u(C + d) - u(C)]``;
    the bracket is dropped when ``C = 0``, where ``u(C)`` is unbounded.

    Raises:
        ConfigurationError: for anything but one node, one prosumer, one
            generator and positive fixed demand.
    """
    prosumer, gen, demand = _single_node_parts(scenario)
    if not elastic_demand:
        return _solve_one_part_inelastic(scenario, prosumer, gen, demand)

    cost = gen.cost

    def imbalance(lam):
        sell, buy, _ = _one_part_reply(prosumer, lam)
        y = agents.generator_response(gen, lam)
        return sell - buy + y - demand

    # below both u'(Z) and c'(y_min) every reply sits at its lower bound
    lo = 0.5 * min(prosumer.consumption_cap ** -prosumer.utility.eta, c_marginal(cost, cost.y_min))
    if lo <= 0:
        lo = prosumer.consumption_cap ** -prosumer.utility.eta / 2.0
    if imbalance(lo) > 0:
        raise InfeasibleError("minimum generation exceeds demand at every price")
    hi = max(1.0, c_marginal(cost, cost.y_max))
    while imbalance(hi) < 0:
        hi *= 2.0
        if hi > 1e18:
            raise InfeasibleError("supply cannot meet fixed demand")
    lam = bisect(imbalance, lo, hi)
    sell, buy, eq = _one_part_reply(prosumer, lam)
    # generator takes the rounding remainder so the balance closes exactly
    y = min(max(demand + buy - sell, cost.y_min), cost.y_max)
    C = prosumer.capacity
    total = c_value(cost, y) + induced_cost(sell, C, prosumer.utility.eta)
    if buy > 0 and C > 0:
        total -= u_value(prosumer.utility, C + buy) - u_value(prosumer.utility, C)
    return OnePartOutcome(_solution(scenario, prosumer, gen, sell, buy, y, lam), total, eq)


def _solve_one_part_inelastic(scenario, prosumer, gen, demand) -> OnePartOutcome:
    cost = gen.cost
    C, eta = prosumer.capacity, prosumer.utility.eta
    lo = max(0.0, demand - cost.y_max)
    hi = min(C, demand - cost.y_min)
    if lo > hi:
        raise InfeasibleError("no split of fixed demand respects the generator bounds")

    def slope(x):
        return induced_inverse_supply(x, C, eta) - c_marginal(cost, demand - x)

    if C == 0 or slope(lo) >= 0:
        x = lo
    else:
        top = hi if hi < C else math.nextafter(C, 0.0)
        x = top if slope(top) <= 0 else bisect(slope, lo, top)
    if x > 0 and x >= C:
        raise InfeasibleError("fixed demand requires selling the full DER capacity")
    y = demand - x
    lam = induced_inverse_supply(x, C, eta) if x > 0 else c_marginal(cost, y)
    eq = one_part_price(C, eta, lam) if C > 0 else OnePartEquilibrium(lam, 0.0, 0.0, lam, False)
    total = c_value(cost, y) + induced_cost(x, C, eta)
    return OnePartOutcome(_solution(scenario, prosumer, gen, x, 0.0, y, lam), total, eq)


def two_part_prices(solution: DispatchSolution, scenario: Scenario) -> list[TwoPartPrice]:
    """Aggregator's optimal offer to each prosumer at the solution's nodal prices."""
    prices = []
    for p in scenario.prosumers:
        lam = float(solution.nodal_price[p.node])
        if lam > 0:
            prices.append(agents.aggregator_optimal_price(p, lam).price)
        else:
            prices.append(TwoPartPrice(0.0, max(lam, 0.0)))
    return prices


def welfare_decomposition(
    solution: DispatchSolution,
    scenario: Scenario,
    model: str | None = None,
    prices: list[TwoPartPrice] | None = None,
) -> WelfareDecomposition:
    """Split welfare into prosumer, aggregator, generator and merchandising surplus.

    Fixed load pays its nodal price and is booked under prosumer surplus.
    For the aggregation model the two-part prices default to the
    aggregator's optimal offers at the solution's nodal prices.
    """
    model = model or solution.model
    lam = np.asarray(solution.nodal_price, dtype=float)
    h = np.asarray(solution.net_injection, dtype=float)
    x, d, y = solution.sell, solution.buy, solution.generation

    utility = 0.0
    for k, p in enumerate(scenario.prosumers):
        utility += u_value(p.utility, p.capacity - x[k] + d[k])
    costs = sum(c_value(g.cost, float(y[j])) for j, g in enumerate(scenario.generators))

    gs = sum(float(lam[g.node]) * float(y[j]) for j, g in enumerate(scenario.generators)) - costs
    ms = float(lam @ h)
    if model == "aggregation":
        if prices is None:
            prices = two_part_prices(solution, scenario)
        ps = -float(lam @ np.asarray(scenario.fixed_demand, dtype=float))
        as_ = 0.0
        for k, p in enumerate(scenario.prosumers):
            lk = float(lam[p.node])
            fee = prices[k].participation_fee if x[k] > 0 else 0.0
            pk = prices[k].marginal_price
            ps += u_value(p.utility, p.capacity - x[k] + d[k]) - lk * d[k] + pk * x[k] - fee
            as_ += fee + (lk - pk) * x[k]
    else:
        supply = np.zeros(scenario.node_count)
        np.add.at(supply, [g.node for g in scenario.generators], np.asarray(y, dtype=float))
        ps = utility - float(lam @ (h + supply))
        as_ = 0.0
    return WelfareDecomposition(ps, as_, gs, ms, utility - costs)


def poag(scenario: Scenario, tol: float = DEFAULT_TOL, normalization: str = "opportunity") -> PoAgResult:
    """Price of Aggregation: one-part cost over efficient cost.

    ``opportunity`` (default) charges the efficient model the utility the
    prosumer gives up, ``c(y*) + u(C) - u(z*)``, which shares the one-part
    cost's baseline. ``literal`` uses the negative welfare ``c(y*) - u(z*)``.
    A prosumer without capacity gives PoAg = 1 by convention.

    Raises:
        DomainError: if the efficient cost is not positive.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    prosumer, gen, _ = _single_node_parts(scenario)
    one = solve_one_part(scenario, tol)
    if prosumer.capacity == 0:
        return PoAgResult(one.cost, one.cost, 1.0, normalization)
    eff = solve_benchmark(scenario, tol)
    z = prosumer.capacity - eff.sell[0] + eff.buy[0]
    cost_eff = c_value(gen.cost, float(eff.generation[0])) - u_value(prosumer.utility, z)
    if normalization == "opportunity":
        cost_eff += u_value(prosumer.utility, prosumer.capacity)
    if not cost_eff > 0:
        raise DomainError(f"efficient cost {cost_eff} is not positive; PoAg undefined")
    return PoAgResult(one.cost, cost_eff, one.cost / cost_eff, normalization)
