"""Economic dispatch for the benchmark, aggregation and no-DER programs.

The operator maximises ``sum u(C - x + d) - sum c(y)`` subject to the nodal
balance ``h = Dbar + D - Y - X``, ``1'h = 0`` and ``B h <= f``. The programs
are solved in the dual. Nodal prices take the form ``lam = gamma + B' mu``;
for given prices every agent responds in closed form (see :mod:`.agents`), so
the dual function is a cheap, smooth-ish convex function of ``(gamma, mu)``.
``gamma`` is found exactly by bracketed root finding on total imbalance and
``mu >= 0`` by a projected Newton method with Armijo backtracking. The
result is accepted on its KKT residuals, which :func:`verify_kkt` recomputes
from scratch.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import agents
from .domain import Scenario
from .errors import ConvergenceError, InfeasibleError
from .utility import (
    c_inverse_marginal_slope,
    c_marginal,
    c_value,
    u_inverse_marginal,
    u_inverse_marginal_slope,
    u_marginal,
    u_value,
)

MODELS = ("benchmark", "aggregation", "no_der")
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 100_000
_MU_LIMIT = 1e12
_ARMIJO = 1e-4
_DUAL_NOISE = 1e-13


def max_iters_from_env() -> int:
    raw = os.environ.get("DERMKT_MAX_ITERS")
    return int(raw) if raw else DEFAULT_MAX_ITERS


@dataclass(frozen=True, eq=False)
class DispatchSolution:
    """Primal dispatch, nodal prices and line multipliers of one solve."""

    model: str
    sell: np.ndarray
    buy: np.ndarray
    generation: np.ndarray
    net_injection: np.ndarray
    nodal_price: np.ndarray
    line_multiplier: np.ndarray
    balance_residual: float
    welfare: float
    system_price: float = math.nan
    iterations: int = 0


@dataclass(frozen=True)
class KktReport:
    stationarity_residual: float
    primal_residual: float
    complementarity_residual: float
    is_equilibrium: bool
    tol: float


class _Market:
    """Scenario flattened into arrays, plus per-model agent responses."""

    def __init__(self, scenario: Scenario, model: str):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
        self.scenario = scenario
        self.model = model
        self.n = scenario.node_count
        self.B = scenario.network.B
        self.f = scenario.network.f
        self.demand = np.array(scenario.fixed_demand, dtype=float)
        self.prosumers = scenario.prosumers
        self.generators = scenario.generators
        self.p_node = np.array([p.node for p in self.prosumers], dtype=int)
        self.g_node = np.array([g.node for g in self.generators], dtype=int)

    def prosumer_response(self, k: int, lam: float) -> tuple[float, float, float]:
        """``(sell, buy, consumption)`` of prosumer ``k`` at price ``lam``."""
        p = self.prosumers[k]
        C, Z = p.capacity, p.consumption_cap
        if lam <= 0:
            # free or paid-to-take energy: consume up to the cap
            return 0.0, Z - C, Z
        z1 = u_inverse_marginal(p.utility, lam)
        if self.model == "no_der":
            z = min(max(z1, C), Z)
            return 0.0, z - C, z
        if self.model == "benchmark":
            r = agents.prosumer_direct_response(p, lam)
        else:
            r = agents.aggregator_optimal_price(p, lam).response
        # consumption taken from the threshold, not C - x + d, to avoid cancellation
        z = z1 if r.sell > 0 else C + r.buy
        return r.sell, r.buy, z

    def _prosumer_slope(self, k: int, lam: float) -> float:
        p = self.prosumers[k]
        if lam <= 0:
            return 0.0
        z1 = u_inverse_marginal(p.utility, lam)
        lower = p.capacity if self.model == "no_der" else 0.0
        if lower < z1 < p.consumption_cap:
            return -u_inverse_marginal_slope(p.utility, lam)
        return 0.0

    def responses(self, lam: np.ndarray):
        sell = np.empty(len(self.prosumers))
        buy = np.empty(len(self.prosumers))
        z = np.empty(len(self.prosumers))
        for k, node in enumerate(self.p_node):
            sell[k], buy[k], z[k] = self.prosumer_response(k, float(lam[node]))
        gen = np.array(
            [agents.generator_response(g, float(lam[g.node])) for g in self.generators], dtype=float
        )
        return sell, buy, gen, z

    def supply(self, lam: np.ndarray, with_slope: bool = False):
        """Nodal net supply ``X - D + Y - Dbar`` (and its slope in ``lam``)."""
        sell, buy, gen, z = self.responses(lam)
        s = -self.demand.copy()
        np.add.at(s, self.p_node, sell - buy)
        np.add.at(s, self.g_node, gen)
        primal = (sell, buy, gen, z)
        if not with_slope:
            return s, primal
        ds = np.zeros(self.n)
        for k, node in enumerate(self.p_node):
            ds[node] += self._prosumer_slope(k, float(lam[node]))
        for j, g in enumerate(self.generators):
            c = g.cost
            if c.y_min < gen[j] < c.y_max:
                ds[g.node] += c_inverse_marginal_slope(c, float(lam[g.node]))
        return s, primal, ds

    def lagrangian_value(self, lam: np.ndarray, primal) -> float:
        """Agents' part of the dual function at prices ``lam``."""
        sell, buy, gen, z = primal
        total = -float(lam @ self.demand)
        for k, p in enumerate(self.prosumers):
            lk = float(lam[p.node])
            total += u_value(p.utility, z[k]) + lk * (sell[k] - buy[k])
        for j, g in enumerate(self.generators):
            lj = float(lam[g.node])
            total += lj * gen[j] - c_value(g.cost, gen[j])
        return total

    def welfare(self, z, gen) -> float:
        w = 0.0
        for k, p in enumerate(self.prosumers):
            w += u_value(p.utility, z[k])
        for j, g in enumerate(self.generators):
            w -= c_value(g.cost, gen[j])
        return w

    def system_price(self, shift: np.ndarray) -> float:
        """Scalar ``gamma`` clearing total supply for nodal offsets ``shift``."""

        def imbalance(gamma):
            return float(np.sum(self.supply(gamma + shift)[0]))

        lo = -float(np.max(shift)) if self.n else 0.0
        t_lo = imbalance(lo)
        if t_lo > 0:
            raise InfeasibleError(
                f"minimum generation exceeds demand by {t_lo:.6g} at every price"
            )
        if t_lo == 0:
            return lo
        base = -float(np.min(shift))
        step = 1.0
        hi = base + step
        t_hi = imbalance(hi)
        while t_hi < 0:
            step *= 2.0
            if step > 1e18:
                raise InfeasibleError("total supply capacity cannot meet fixed demand")
            lo, hi = hi, base + step
            t_hi = imbalance(hi)
        if t_hi == 0:
            return hi
        return brentq(imbalance, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class _State:
    mu: np.ndarray
    gamma: float
    lam: np.ndarray
    supply: np.ndarray
    slope: np.ndarray
    primal: tuple
    dual: float
    grad: np.ndarray
    pgrad: float


def _evaluate(market: _Market, mu: np.ndarray) -> _State:
    shift = market.B.T @ mu if len(mu) else np.zeros(market.n)
    gamma = market.system_price(shift)
    lam = gamma + shift
    s, primal, ds = market.supply(lam, with_slope=True)
    grad = market.f + market.B @ s
    dual = market.lagrangian_value(lam, primal) + float(mu @ market.f)
    pg = mu - np.maximum(mu - grad, 0.0)
    return _State(mu, gamma, lam, s, ds, primal, dual, grad, float(np.max(np.abs(pg), initial=0.0)))


def _newton_direction(market: _Market, st: _State) -> np.ndarray:
    B, ds = market.B, st.slope
    H = (B * ds) @ B.T
    total = float(np.sum(ds))
    if total > 0:
        v = B @ ds
        H = H - np.outer(v, v) / total
    eps = min(1e-6, st.pgrad)
    active = (st.mu <= eps) & (st.grad > 0)
    free = ~active
    d = np.zeros_like(st.mu)
    scale = max(1.0, float(np.max(np.abs(np.diag(H)), initial=0.0)))
    if np.any(free):
        Hf = H[np.ix_(free, free)]
        reg = 1e-10 * scale + 1e-12
        d[free] = -np.linalg.solve(Hf + reg * np.eye(int(free.sum())), st.grad[free])
    d[active] = -st.grad[active] / scale
    return d


def _solve(scenario: Scenario, model: str, tol: float, max_iter: int | None) -> DispatchSolution:
    market = _Market(scenario, model)
    max_iter = max_iters_from_env() if max_iter is None else max_iter
    L = len(market.f)
    st = _evaluate(market, np.zeros(L))
    it = 0
    target = 1e-2 * tol
    while L and st.pgrad > target:
        if it >= max_iter:
            raise ConvergenceError(
                f"line multipliers did not converge in {max_iter} iterations",
                {"projected_gradient": st.pgrad},
            )
        it += 1
        d = _newton_direction(market, st)
        noise = _DUAL_NOISE * (1.0 + abs(st.dual))
        accepted = None
        alpha = 1.0
        for _ in range(60):
            trial_mu = np.maximum(st.mu + alpha * d, 0.0)
            trial = _evaluate(market, trial_mu)
            predicted = float(st.grad @ (trial_mu - st.mu))
            if -predicted <= noise:
                # decrease is below the resolution of the dual value:
                # judge the step by the projected gradient instead
                if trial.pgrad < st.pgrad:
                    accepted = trial
                    break
            elif trial.dual <= st.dual + _ARMIJO * predicted:
                accepted = trial
                break
            alpha *= 0.5
        if accepted is None:
            if st.pgrad <= tol:
                break
            raise ConvergenceError(
                "line search stalled before reaching tolerance",
                {"projected_gradient": st.pgrad},
            )
        st = accepted
        if np.max(st.mu, initial=0.0) > _MU_LIMIT:
            raise InfeasibleError("line multipliers diverge: network constraints are infeasible")
    return _assemble(market, st, it)


def _assemble(market: _Market, st: _State, iterations: int) -> DispatchSolution:
    sell, buy, gen, z = (np.asarray(a, dtype=float) for a in st.primal)
    raw = -st.supply
    h = raw - np.mean(raw)
    return DispatchSolution(
        model=market.model,
        sell=sell,
        buy=buy,
        generation=gen,
        net_injection=h,
        nodal_price=st.lam.copy(),
        line_multiplier=st.mu.copy(),
        balance_residual=float(np.max(np.abs(h - raw), initial=0.0)),
        welfare=market.welfare(z, gen),
        system_price=st.gamma,
        iterations=iterations,
    )


def solve_benchmark(scenario: Scenario, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> DispatchSolution:
    """Welfare-maximising dispatch with prosumers trading at nodal prices.

    Raises:
        InfeasibleError: if no dispatch meets demand and the network limits.
        ConvergenceError: if the iteration cap is reached first.
    """
    return _solve(scenario, "benchmark", tol, max_iter)


def solve_aggregation(scenario: Scenario, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> DispatchSolution:
    """Dispatch with every prosumer selling through a two-part-pricing aggregator.

    Prosumer quantities at each candidate price come from the aggregator's
    optimal offer and the prosumer's reply to it, not from the direct
    response.
    """
    return _solve(scenario, "aggregation", tol, max_iter)


def solve_no_der(scenario: Scenario, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> DispatchSolution:
    """Dispatch with prosumers barred from selling (``x = 0``)."""
    return _solve(scenario, "no_der", tol, max_iter)


SOLVERS = {"benchmark": solve_benchmark, "aggregation": solve_aggregation, "no_der": solve_no_der}


def solve(scenario: Scenario, model: str = "benchmark", tol: float = DEFAULT_TOL, max_iter: int | None = None):
    if model not in SOLVERS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    return SOLVERS[model](scenario, tol, max_iter)


def map_benchmark_to_aggregation(benchmark: DispatchSolution) -> DispatchSolution:
    """Split each net position into ``x = [x-d]^+`` and ``d = [-(x-d)]^+``."""
    net = benchmark.sell - benchmark.buy
    return replace(
        benchmark,
        model="aggregation",
        sell=np.maximum(net, 0.0),
        buy=np.maximum(-net, 0.0),
    )


def equilibrium_prices(solution: DispatchSolution) -> np.ndarray:
    return solution.nodal_price.copy()


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(b))


def _prosumer_stationarity(p, z: float, lam: float, lower: float) -> float:
    if not z > 0:
        return math.inf
    res = abs(u_marginal(p.utility, z) - lam)
    Z = p.consumption_cap
    if _near(z, Z):
        # consumption at its cap: needs u'(Z) >= lam
        res = min(res, max(0.0, lam - u_marginal(p.utility, Z)))
    if lower > 0 and _near(z, lower):
        res = min(res, max(0.0, u_marginal(p.utility, lower) - lam))
    return res


def _generator_stationarity(g, y: float, lam: float) -> float:
    c = g.cost
    res = abs(c_marginal(c, y) - lam)
    if c.y_min == c.y_max:
        return 0.0
    if _near(y, c.y_min):
        res = min(res, max(0.0, lam - c_marginal(c, c.y_min)))
    if _near(y, c.y_max):
        res = min(res, max(0.0, c_marginal(c, c.y_max) - lam))
    return res


def _box_violation(value: float, lo: float, hi: float) -> float:
    return max(lo - value, value - hi, 0.0)


def verify_kkt(solution: DispatchSolution, scenario: Scenario, model: str | None = None, tol: float = DEFAULT_TOL) -> KktReport:
    """Recompute KKT residuals (max-norm) of a dispatch for the given program.

    Stationarity covers every agent (an active box bound is accepted when its
    multiplier has the right sign) and the net injections, whose condition
    is that ``lam - B' mu`` is the same at every node. Primal feasibility
    covers the nodal balance, ``1'h = 0``, ``Bh <= f`` and the model's
    participant bounds; complementarity covers ``mu >= 0`` and
    ``mu * (f - Bh) = 0``.
    """
    model = model or solution.model
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    net = scenario.network
    B, f = net.B, net.f
    lam = np.asarray(solution.nodal_price, dtype=float)
    mu = np.asarray(solution.line_multiplier, dtype=float)
    x, d, y = solution.sell, solution.buy, solution.generation
    h = np.asarray(solution.net_injection, dtype=float)

    stat = 0.0
    primal = 0.0
    raw = np.array(scenario.fixed_demand, dtype=float)
    for k, p in enumerate(scenario.prosumers):
        C, Z = p.capacity, p.consumption_cap
        z = C - x[k] + d[k]
        lower = C if model == "no_der" else 0.0
        stat = max(stat, _prosumer_stationarity(p, z, float(lam[p.node]), lower))
        raw[p.node] += d[k] - x[k]
        if model == "benchmark":
            v = max(_box_violation(x[k] - d[k], C - Z, C), -x[k], -d[k], 0.0)
        elif model == "aggregation":
            v = max(_box_violation(x[k], 0.0, C), _box_violation(d[k], 0.0, Z - C + x[k]))
        else:
            v = max(abs(x[k]), _box_violation(d[k], 0.0, Z - C))
        primal = max(primal, v)
    for j, g in enumerate(scenario.generators):
        stat = max(stat, _generator_stationarity(g, float(y[j]), float(lam[g.node])))
        raw[g.node] -= y[j]
        primal = max(primal, _box_violation(float(y[j]), g.cost.y_min, g.cost.y_max))

    reduced = lam - (B.T @ mu if len(mu) else 0.0)
    stat = max(stat, float(np.max(reduced) - np.min(reduced)) / 2.0)

    flow = B @ h if len(f) else np.zeros(0)
    primal = max(
        primal,
        abs(float(np.sum(h))),
        float(np.max(np.abs(h - raw), initial=0.0)),
        float(np.max(flow - f, initial=0.0)),
    )
    comp = max(
        float(np.max(np.abs(mu * (f - flow)), initial=0.0)),
        float(np.max(-mu, initial=0.0)),
    )
    ok = stat <= tol and primal <= tol and comp <= tol
    return KktReport(float(stat), float(primal), float(comp), bool(ok), float(tol))


def best_response_gap(solution: DispatchSolution, scenario: Scenario, model: str | None = None) -> float:
    """Largest gap between the dispatch and agents' own replies to its prices.

    For the aggregation model prosumer replies are to the aggregator's
    optimal two-part offer at the nodal price.
    """
    market = _Market(scenario, model or solution.model)
    sell, buy, gen, _ = market.responses(solution.nodal_price)
    gaps = [
        np.abs(sell - solution.sell),
        np.abs(buy - solution.buy),
        np.abs(gen - solution.generation),
    ]
    return float(max((np.max(g, initial=0.0) for g in gaps), default=0.0))
