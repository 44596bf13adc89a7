"""Capacity sweeps comparing efficient, no-DER and one-part outcomes.

Each point sets every prosumer's capacity to ``C`` and records welfare under
the requested models. Rows come back in ascending capacity order whatever
the number of worker processes, and the CSV text depends only on the inputs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields

import numpy as np

from .dispatch import DEFAULT_TOL, solve_benchmark, solve_no_der
from .domain import Scenario
from .errors import SweepError
from .onepart import poag, solve_one_part, two_part_prices

SWEEP_MODELS = ("efficient", "no_der", "one_part")


@dataclass(frozen=True)
class SweepRow:
    """One sweep point; ``None`` marks a model that was not run.

    ``P_star`` is the total participation fee and ``p_star`` the per-unit
    price of the two-part offers at the efficient prices (sell-weighted over
    prosumers, or the system price when nobody sells).
    """

    capacity: float
    welfare_efficient: float | None = None
    welfare_no_der: float | None = None
    welfare_one_part: float | None = None
    poag: float | None = None
    # lambda is a keyword
    lambda_: float | None = None
    x_efficient: float | None = None
    P_star: float | None = None
    p_star: float | None = None


HEADER = tuple(f.name.rstrip("_") for f in fields(SweepRow))


def format_number(value: float | None) -> str:
    """12 significant digits; empty for ``None``; never ``-0``."""
    if value is None:
        return ""
    return f"{value + 0.0:.12g}"


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def column(self, name: str) -> np.ndarray:
        attr = "lambda_" if name == "lambda" else name
        return np.array([np.nan if getattr(r, attr) is None else getattr(r, attr) for r in self.rows])

    def to_csv(self) -> str:
        lines = [",".join(HEADER)]
        lines += [",".join(format_number(v) for v in astuple(row)) for row in self.rows]
        return "\n".join(lines) + "\n"


def capacity_grid(start: float, stop: float, steps: int) -> list[float]:
    """``steps`` evenly spaced capacities from ``start`` to ``stop`` inclusive."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if not (0 <= start <= stop and math.isfinite(stop)):
        raise ValueError(f"need 0 <= from <= to, got {start} and {stop}")
    return [float(c) for c in np.linspace(start, stop, steps)]


def sweep_point(
    scenario: Scenario,
    capacity: float,
    models=SWEEP_MODELS,
    tol: float = DEFAULT_TOL,
    normalization: str = "opportunity",
) -> SweepRow:
    sc = scenario.with_capacity(capacity)
    out: dict[str, float] = {}
    if "efficient" in models:
        eff = solve_benchmark(sc, tol)
        sell = np.asarray(eff.sell)
        prices = two_part_prices(eff, sc)
        total = float(sell.sum())
        out["welfare_efficient"] = eff.welfare
        out["lambda_"] = eff.system_price
        out["x_efficient"] = total
        out["P_star"] = sum(pr.participation_fee for pr, x in zip(prices, sell) if x > 0)
        offered = {pr.marginal_price for pr, x in zip(prices, sell) if x > 0}
        if len(offered) == 1:
            out["p_star"] = offered.pop()
        elif offered:
            out["p_star"] = sum(pr.marginal_price * x for pr, x in zip(prices, sell)) / total
        else:
            out["p_star"] = eff.system_price
    if "no_der" in models:
        out["welfare_no_der"] = solve_no_der(sc, tol).welfare
    if "one_part" in models:
        out["welfare_one_part"] = solve_one_part(sc, tol).solution.welfare
        if "efficient" in models:
            out["poag"] = poag(sc, tol, normalization).poag
    for name, value in out.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} is not finite")
    return SweepRow(capacity=capacity, **{k: float(v) for k, v in out.items()})


def _guarded_point(args) -> SweepRow:
    scenario, capacity, models, tol, normalization = args
    try:
        return sweep_point(scenario, capacity, models, tol, normalization)
    except Exception as exc:
        raise SweepError(capacity, f"{type(exc).__name__}: {exc}", type(exc).__name__) from None


def run_sweep(
    scenario: Scenario,
    start: float,
    stop: float,
    steps: int,
    models=SWEEP_MODELS,
    tol: float = DEFAULT_TOL,
    normalization: str = "opportunity",
    jobs: int = 1,
) -> SweepResult:
    """Evaluate every capacity on the grid, optionally in ``jobs`` processes.

    Raises:
        SweepError: at the first failing capacity in grid order.
    """
    unknown = set(models) - set(SWEEP_MODELS)
    if unknown:
        raise ValueError(f"unknown sweep models: {', '.join(sorted(unknown))}")
    tasks = [(scenario, c, tuple(models), tol, normalization) for c in capacity_grid(start, stop, steps)]
    if jobs <= 1:
        rows = [_guarded_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_guarded_point, tasks))
    return SweepResult(tuple(rows))
