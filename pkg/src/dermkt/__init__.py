"""Wholesale electricity markets with aggregated distributed energy resources.

Solves economic dispatch with prosumers trading directly, through a
two-part-pricing aggregator, or not at all, and compares these with the
one-part pricing counterfactual.
"""

from .dispatch import (
    DispatchSolution,
    KktReport,
    best_response_gap,
    solve,
    solve_aggregation,
    solve_benchmark,
    solve_no_der,
    verify_kkt,
)
from .domain import Generator, Line, Network, Prosumer, Scenario, validate
from .onepart import one_part_price, poag, solve_one_part, welfare_decomposition
from .scenario_io import bundled_scenario, load_scenario, random_scenario
from .utility import Isoelastic, Quadratic

__all__ = [
    "DispatchSolution",
    "Generator",
    "Isoelastic",
    "KktReport",
    "Line",
    "Network",
    "Prosumer",
    "Quadratic",
    "Scenario",
    "best_response_gap",
    "bundled_scenario",
    "load_scenario",
    "one_part_price",
    "poag",
    "random_scenario",
    "solve",
    "solve_aggregation",
    "solve_benchmark",
    "solve_no_der",
    "solve_one_part",
    "validate",
    "verify_kkt",
    "welfare_decomposition",
]
