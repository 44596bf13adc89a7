"""Best responses of prosumers and generators, and two-part pricing.

All functions are closed form and act on one agent at one wholesale price
``lam``. A prosumer with capacity ``C`` consumes ``z = C - sell + buy``; the
thresholds ``z1`` and ``z2`` are the consumption levels where marginal
utility equals ``lam`` and the aggregator's marginal price ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import Generator, Prosumer, ProsumerResponse, TwoPartPrice
from .errors import ArbitrageError, DomainError
from .utility import c_inverse_marginal, u_inverse_marginal, u_value

# slack (relative to |u(C)|) in the participation test so that a fee computed
# as exactly the prosumer's surplus counts as a tie, not a refusal
_TIE_SLACK = 1e-12


@dataclass(frozen=True)
class ConsumptionThresholds:
    z1: float
    z2: float


@dataclass(frozen=True)
class AggregatorOutcome:
    price: TwoPartPrice
    response: ProsumerResponse
    profit: float
    trade_occurs: bool


def _check_price(lam):
    if not lam > 0:
        raise DomainError(f"wholesale price must be > 0, got {lam}")


def consumption_thresholds(prosumer: Prosumer, p: float, lam: float) -> ConsumptionThresholds:
    """``z1 = (u')^-1(lam)`` and ``z2 = (u')^-1(p)``; ``z2`` is inf when ``p == 0``."""
    _check_price(lam)
    z1 = u_inverse_marginal(prosumer.utility, lam)
    z2 = u_inverse_marginal(prosumer.utility, p) if p > 0 else float("inf")
    return ConsumptionThresholds(z1, z2)


def _buy_only(prosumer: Prosumer, z1: float) -> ProsumerResponse:
    C, Z = prosumer.capacity, prosumer.consumption_cap
    return ProsumerResponse(0.0, min(max(z1 - C, 0.0), Z - C))


def participation_surplus(prosumer: Prosumer, p: float, z: float) -> float:
    """Gain ``p*(C - z) + u(z) - u(C)`` from selling down to consumption ``z``."""
    C = prosumer.capacity
    return p * (C - z) + u_value(prosumer.utility, z) - u_value(prosumer.utility, C)


def prosumer_direct_response(prosumer: Prosumer, lam: float) -> ProsumerResponse:
    """Prosumer's optimal trade when it faces the wholesale price directly.

    The net position ``x - d = C - min(z1, Z)`` is split into its positive
    and negative parts.
    """
    _check_price(lam)
    z = min(u_inverse_marginal(prosumer.utility, lam), prosumer.consumption_cap)
    net = prosumer.capacity - z
    return ProsumerResponse(max(net, 0.0), max(-net, 0.0))


def generator_response(generator: Generator, lam: float) -> float:
    """Profit-maximising output: marginal cost equals ``lam``, clipped to bounds."""
    cost = generator.cost
    return min(max(c_inverse_marginal(cost, lam), cost.y_min), cost.y_max)


def prosumer_agg_response(prosumer: Prosumer, price: TwoPartPrice, lam: float) -> ProsumerResponse:
    """Prosumer's best response to an aggregator offer ``(P, p)``.

    If ``C <= z2`` the prosumer never sells and buys ``[z1 - C]^+`` on the
    wholesale market. Otherwise it sells ``C - z2`` as long as the fee does
    not exceed its surplus from selling; a fee equal to the surplus still
    results in a sale.

    Raises:
        ArbitrageError: if ``p > lam``.
    """
    P, p = price.participation_fee, price.marginal_price
    if p > lam:
        raise ArbitrageError(f"marginal price {p} exceeds wholesale price {lam}")
    th = consumption_thresholds(prosumer, p, lam)
    C = prosumer.capacity
    if C <= th.z2:
        return _buy_only(prosumer, th.z1)
    bound = participation_surplus(prosumer, p, th.z2)
    slack = _TIE_SLACK * (1.0 + abs(u_value(prosumer.utility, C)))
    if P <= bound + slack:
        return ProsumerResponse(C - th.z2, 0.0)
    return ProsumerResponse(0.0, 0.0)


def aggregator_profit(price: TwoPartPrice, lam: float, response: ProsumerResponse) -> float:
    x = response.sell
    fee = price.participation_fee if x > 0 else 0.0
    return fee + (lam - price.marginal_price) * x


def aggregator_optimal_price(prosumer: Prosumer, lam: float) -> AggregatorOutcome:
    """Profit-maximising two-part offer to one prosumer.

    When the prosumer would sell at ``lam`` (``z1 < C``) the offer passes the
    wholesale price through, ``p = lam``, and extracts the whole selling
    surplus as the fee. Otherwise no offer can induce a sale and the canonical
    price ``(0, lam)`` is returned with zero profit.
    """
    _check_price(lam)
    z1 = u_inverse_marginal(prosumer.utility, lam)
    if z1 >= prosumer.capacity:
        price = TwoPartPrice(0.0, lam)
        return AggregatorOutcome(price, prosumer_agg_response(prosumer, price, lam), 0.0, False)
    fee = max(participation_surplus(prosumer, lam, z1), 0.0)
    price = TwoPartPrice(fee, lam)
    response = prosumer_agg_response(prosumer, price, lam)
    profit = aggregator_profit(price, lam, response)
    return AggregatorOutcome(price, response, profit, response.sell > 0)


def prosumer_payoff(
    prosumer: Prosumer, response: ProsumerResponse, price: TwoPartPrice, lam: float
) -> float:
    """Prosumer payoff under the aggregation model.

    Raises:
        DomainError: if the implied consumption is not positive.
    """
    x, d = response.sell, response.buy
    z = d + prosumer.capacity - x
    if not z > 0:
        raise DomainError(f"consumption must be > 0, got {z}")
    value = u_value(prosumer.utility, z) - lam * d
    if x > 0:
        value += price.marginal_price * x - price.participation_fee
    return value
