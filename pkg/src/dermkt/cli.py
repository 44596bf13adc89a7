"""Command-line driver: ``dermkt solve|sweep|gen-random|validate``.

Exit codes: 0 on success, 1 on bad input (unreadable or invalid scenario,
unsupported configuration, infeasible market), 2 when a solver does not
converge or its output fails the equilibrium check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .dispatch import DEFAULT_TOL, MODELS, best_response_gap, solve, verify_kkt
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    InfeasibleError,
    ScenarioError,
    SweepError,
)
from .onepart import NORMALIZATIONS, two_part_prices, welfare_decomposition
from .scenario_io import dumps_scenario, random_scenario, resolve_scenario
from .sweep import SWEEP_MODELS, run_sweep

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2


def _round(value):
    """Round floats to 12 significant digits, recursively; arrays become lists."""
    if isinstance(value, np.ndarray):
        return [_round(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value + 0.0:.12g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _results_document(scenario, solution, tol: float) -> dict:
    kkt = verify_kkt(solution, scenario, tol=tol)
    ids = list(scenario.network.node_ids)
    doc = {
        "model": solution.model,
        "welfare": solution.welfare,
        "system_price": solution.system_price,
        "iterations": solution.iterations,
        "nodes": [
            {"id": ids[i], "price": solution.nodal_price[i], "net_injection": solution.net_injection[i]}
            for i in range(scenario.node_count)
        ],
        "prosumers": [
            {"id": p.id, "sell": solution.sell[k], "buy": solution.buy[k]}
            for k, p in enumerate(scenario.prosumers)
        ],
        "generators": [
            {"id": g.id, "output": solution.generation[j]} for j, g in enumerate(scenario.generators)
        ],
        "line_multipliers": solution.line_multiplier,
        "balance_residual": solution.balance_residual,
        "decomposition": asdict(welfare_decomposition(solution, scenario)),
        "kkt": asdict(kkt),
        "best_response_gap": best_response_gap(solution, scenario),
    }
    if solution.model == "aggregation":
        prices = two_part_prices(solution, scenario)
        for entry, price in zip(doc["prosumers"], prices):
            entry["participation_fee"] = price.participation_fee
            entry["marginal_price"] = price.marginal_price
    return _round(doc)


def cmd_solve(args) -> int:
    scenario = resolve_scenario(args.scenario)
    solution = solve(scenario, args.model, tol=args.tol)
    doc = _results_document(scenario, solution, args.tol)
    _emit(json.dumps(doc, indent=2, allow_nan=False) + "\n", args.output)
    if not doc["kkt"]["is_equilibrium"]:
        print("error: solution failed the equilibrium check", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = resolve_scenario(args.scenario)
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    try:
        result = run_sweep(
            scenario,
            args.start,
            args.stop,
            args.steps,
            models=models,
            tol=args.tol,
            normalization=args.normalization,
            jobs=args.jobs,
        )
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER if exc.error_type == "ConvergenceError" else EXIT_INPUT
    _emit(result.to_csv(), args.output)
    return EXIT_OK


def cmd_gen_random(args) -> int:
    scenario = random_scenario(args.seed, args.nodes, args.prosumers, args.generators)
    _emit(dumps_scenario(scenario), args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = resolve_scenario(args.scenario)
    print(f"ok: {scenario.node_count} nodes, {len(scenario.prosumers)} prosumers, "
          f"{len(scenario.generators)} generators")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dermkt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="clear the market for one scenario")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.add_argument("--model", choices=MODELS, default="benchmark")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--output", "-o", help="results JSON path (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep prosumer capacity and write CSV")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.add_argument("--param", choices=["capacity"], default="capacity")
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=100.0)
    p.add_argument("--steps", type=int, default=51)
    p.add_argument("--models", default=",".join(SWEEP_MODELS),
                   help=f"comma-separated subset of {','.join(SWEEP_MODELS)}")
    p.add_argument("--normalization", choices=NORMALIZATIONS, default="opportunity")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-random", help="write a seeded random scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nodes", type=int, default=3)
    p.add_argument("--prosumers", type=int, default=4)
    p.add_argument("--generators", type=int, default=2)
    p.add_argument("--output", "-o", help="scenario JSON path (default: stdout)")
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigurationError, InfeasibleError, DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
