import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from builders import GEN, prosumer
from dermkt import agents
from dermkt.domain import Generator, ProsumerResponse, TwoPartPrice
from dermkt.errors import ArbitrageError, DomainError
from dermkt.utility import u_value


def _direct_oracle(p, lam, step=1e-4):
    """Grid search of u(C - n) + lam*n over net sales n in [C - Z, C)."""
    lo = max(p.capacity - p.consumption_cap, -10.0)
    net = np.arange(lo, p.capacity, step)
    z = p.capacity - net
    if p.utility.eta == 1.0:
        value = np.log(z) + lam * net
    else:
        e = p.utility.eta
        value = (z ** (1 - e) - 1) / (1 - e) + lam * net
    return net[np.argmax(value)]


@pytest.mark.parametrize(
    "lam, sell, buy",
    [(2.0, 0.5, 0.0), (1.0, 0.0, 0.0), (0.5, 0.0, 1.0)],
)
def test_direct_response_examples(lam, sell, buy):
    p = prosumer(1.0)
    r = agents.prosumer_direct_response(p, lam)
    assert (r.sell, r.buy) == pytest.approx((sell, buy), abs=1e-12)
    assert r.net == pytest.approx(_direct_oracle(p, lam), abs=2e-4)


def test_direct_response_caps_consumption():
    r = agents.prosumer_direct_response(prosumer(1.0, Z=2.0), 0.01)
    assert r.buy == 1.0


def test_direct_response_rejects_nonpositive_price():
    with pytest.raises(DomainError):
        agents.prosumer_direct_response(prosumer(1.0), 0.0)


@pytest.mark.parametrize("lam, y", [(3.0, 100.0), (0.5, 0.0), (25.0, 1000.0)])
def test_generator_response(lam, y):
    g = Generator("g", 0, GEN)
    assert agents.generator_response(g, lam) == pytest.approx(y)
    grid = np.linspace(0.0, 1000.0, 100_001)
    profit = lam * grid - (0.01 * grid**2 + grid)
    assert grid[np.argmax(profit)] == pytest.approx(y, abs=0.01)


P_EXACT = 5.0 + math.log(0.5) - math.log(3.0)


@pytest.mark.parametrize(
    "C, price, sell, buy",
    [
        (3.0, TwoPartPrice(3.2082, 2.0), 2.5, 0.0),
        (3.0, TwoPartPrice(10.0, 2.0), 0.0, 0.0),
        (0.25, TwoPartPrice(0.0, 1.0), 0.0, 0.25),
    ],
)
def test_agg_response_examples(C, price, sell, buy):
    r = agents.prosumer_agg_response(prosumer(C), price, 2.0)
    assert (r.sell, r.buy) == pytest.approx((sell, buy), abs=1e-12)


def test_agg_response_accepts_fee_equal_to_surplus():
    r = agents.prosumer_agg_response(prosumer(3.0), TwoPartPrice(P_EXACT, 2.0), 2.0)
    assert r.sell == pytest.approx(2.5)


def test_agg_response_rejects_arbitrage():
    with pytest.raises(ArbitrageError):
        agents.prosumer_agg_response(prosumer(3.0), TwoPartPrice(0.0, 2.5), 2.0)


def _payoff_grid_oracle(p, price, lam, step=1e-3):
    """Best log-utility payoff over x on a grid (d = 0 when selling) or not selling."""
    C = p.capacity
    x = np.arange(step, C, step)
    sale = np.log(C - x) + price.marginal_price * x - price.participation_fee
    best_sale = sale.max() if x.size else -np.inf
    z1 = min(1.0 / lam, p.consumption_cap)
    no_sale = math.log(max(z1, C)) - lam * max(z1 - C, 0.0)
    return max(best_sale, no_sale)


@settings(max_examples=40, deadline=None)
@given(
    C=st.floats(0.05, 20.0),
    lam=st.floats(0.1, 10.0),
    frac=st.floats(0.05, 1.0),
    fee=st.floats(0.0, 5.0),
)
def test_agg_response_beats_grid(C, lam, frac, fee):
    p = prosumer(C)
    price = TwoPartPrice(fee, frac * lam)
    r = agents.prosumer_agg_response(p, price, lam)
    mine = agents.prosumer_payoff(p, r, price, lam)
    assert mine >= _payoff_grid_oracle(p, price, lam) - 1e-6


def test_optimal_price_examples():
    out = agents.aggregator_optimal_price(prosumer(3.0), 2.0)
    assert out.price.marginal_price == 2.0
    assert out.price.participation_fee == pytest.approx(P_EXACT, abs=1e-12)
    assert out.response.sell == pytest.approx(2.5)
    assert out.profit == pytest.approx(P_EXACT, abs=1e-12)
    assert out.trade_occurs

    none = agents.aggregator_optimal_price(prosumer(0.5), 1.0)
    assert not none.trade_occurs and none.profit == 0.0

    two = agents.aggregator_optimal_price(prosumer(2.0), 1.0)
    assert (two.price.marginal_price, two.price.participation_fee) == pytest.approx((1.0, 1.0 - math.log(2.0)))


def test_optimal_price_rejects_nonpositive_price():
    with pytest.raises(DomainError):
        agents.aggregator_optimal_price(prosumer(1.0), -1.0)


def test_optimal_price_beats_two_part_grid():
    p, lam = prosumer(3.0), 2.0
    best = agents.aggregator_optimal_price(p, lam).profit
    for fee in np.linspace(0.0, 6.0, 61):
        for unit in np.linspace(0.0, lam, 41):
            price = TwoPartPrice(float(fee), float(unit))
            r = agents.prosumer_agg_response(p, price, lam)
            assert agents.aggregator_profit(price, lam, r) <= best + 1e-9


@pytest.mark.parametrize(
    "price, sell, expected",
    [(TwoPartPrice(3.0, 2.0), 2.5, 3.0), (TwoPartPrice(0.0, 1.0), 1.5, 1.5), (TwoPartPrice(5.0, 1.0), 0.0, 0.0)],
)
def test_aggregator_profit(price, sell, expected):
    assert agents.aggregator_profit(price, 2.0, ProsumerResponse(sell, 0.0)) == expected


def test_prosumer_payoff_examples():
    p = prosumer(3.0)
    price = TwoPartPrice(P_EXACT, 2.0)
    assert agents.prosumer_payoff(p, ProsumerResponse(2.5, 0.0), price, 2.0) == pytest.approx(math.log(3.0))
    assert agents.prosumer_payoff(p, ProsumerResponse(0.0, 0.0), TwoPartPrice(9.0, 0.3), 2.0) == pytest.approx(
        math.log(3.0)
    )
    with pytest.raises(DomainError):
        agents.prosumer_payoff(p, ProsumerResponse(3.0, 0.0), price, 2.0)


@settings(max_examples=60, deadline=None)
@given(eta=st.floats(0.5, 3.0), C=st.floats(0.01, 100.0), lam=st.floats(0.05, 20.0))
def test_equilibrium_matches_direct_sale_and_leaves_no_surplus(eta, C, lam):
    p = prosumer(C, eta, Z=C + 1000.0)
    out = agents.aggregator_optimal_price(p, lam)
    direct = agents.prosumer_direct_response(p, lam)
    assume(direct.buy == 0.0)
    assert out.response.sell == pytest.approx(direct.sell, abs=1e-8)
    payoff = agents.prosumer_payoff(p, out.response, out.price, lam)
    assert payoff == pytest.approx(u_value(p.utility, C), abs=1e-8)


def test_thresholds():
    th = agents.consumption_thresholds(prosumer(1.0), 0.0, 2.0)
    assert th.z1 == 0.5 and th.z2 == math.inf
