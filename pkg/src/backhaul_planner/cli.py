"""Command-line interface for planning runs and experiment sweeps.

Two subcommands:

``plan``
    Compute one deployment plan (fiber-only, hybrid heuristic, or exact
    search) for a topology file or a seeded random scenario, write a JSON
    report (plan, feasibility checks, cost, fiber share, diagnostics), and
    print a short summary.

``sweep``
    Run a Monte-Carlo sweep described by a config file's ``sweep`` block,
    write the per-(grid value, method) CSV, and print a summary table.

Exit codes are stable: 0 success, 2 usage/config error, 3 infeasible plan,
4 exact-search budget exhausted (a valid but possibly suboptimal plan is
still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .clique_planner import plan_hybrid
from .exact_planner import check_feasible, plan_exact
from .exceptions import BudgetExhaustedError, InfeasibleError, NeighborLimitError
from .experiments import (
    METHODS,
    ExperimentConfig,
    config_from_dict,
    percent_of_links,
    render_sweep_csv,
    run_sweep,
)
from .fiber_planner import plan_of_only
from .link_models import plan_cost
from .topology import Topology, load_topology, plan_to_dict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4

_METHOD_TOKENS = {
    "of-only": "of_only",
    "of_only": "of_only",
    "hybrid": "hybrid",
    "exact": "exact",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="backhaul-planner",
        description="Plan fiber/hybrid backhaul deployments and run cost sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan_p = sub.add_parser("plan", help="compute one deployment plan")
    plan_p.add_argument(
        "--method",
        required=True,
        choices=sorted(_METHOD_TOKENS),
        help="planner to run",
    )
    source = plan_p.add_mutually_exclusive_group(required=True)
    source.add_argument("--topology", help="JSON topology file to plan for")
    source.add_argument(
        "--scenario",
        help="random scenario spec, e.g. M=7,seed=1[,area_km=5,predeploy_ratio=0.2]",
    )
    _add_shared_flags(plan_p)
    plan_p.add_argument("--out", help="output report path (default plan.json)")

    sweep_p = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a config file")
    _add_shared_flags(sweep_p)
    sweep_p.add_argument("--out", help="output CSV path (default sweep.csv)")
    sweep_p.add_argument(
        "--trials", type=int, help="override the sweep block's trial count"
    )
    sweep_p.add_argument(
        "--workers", type=int, default=1, help="worker processes for trials"
    )
    sweep_p.add_argument(
        "--no-timing",
        action="store_true",
        help="write wall_ms as 0 so reruns are byte-comparable",
    )
    return parser


def _add_shared_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file (flags override its values)")
    sub.add_argument(
        "--seed", type=int, help="base random seed (overrides config and --scenario)"
    )
    sub.add_argument(
        "--neighbor-policy",
        help="hybrid candidate policy: eq4, knn:<k>, or all",
    )
    sub.add_argument(
        "--exclude-predeployed",
        action="store_const",
        const=True,
        help="count only newly added links in the fiber percentage",
    )
    sub.add_argument(
        "--budget",
        type=int,
        help="exact-search node budget; enables exact above its station cap",
    )


def _load_config(args: argparse.Namespace) -> tuple[ExperimentConfig, dict | None]:
    if args.config:
        payload = json.loads(Path(args.config).read_text())
        config, sweep = config_from_dict(payload)
    else:
        config, sweep = ExperimentConfig(), None
    overrides: dict = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.neighbor_policy is not None:
        overrides["neighbor_policy"] = args.neighbor_policy
    if args.exclude_predeployed is not None:
        overrides["exclude_predeployed"] = args.exclude_predeployed
    if args.budget is not None:
        overrides["exact_budget"] = args.budget
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config, sweep


_SCENARIO_KEYS = {"M": int, "seed": int, "area_km": float, "predeploy_ratio": float}


def _parse_scenario(text: str) -> dict:
    values: dict = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, raw = part.partition("=")
        if not sep:
            raise ValueError(f"scenario entry {part!r} is not key=value")
        key = key.strip()
        if key not in _SCENARIO_KEYS:
            raise ValueError(
                f"unknown scenario key {key!r}; known: {sorted(_SCENARIO_KEYS)}"
            )
        values[key] = _SCENARIO_KEYS[key](raw.strip())
    return values


def _resolve_topology(
    args: argparse.Namespace, config: ExperimentConfig
) -> tuple[Topology, int]:
    """Topology plus the seed that produced it (config seed for files)."""
    from .experiments import generate_scenario

    if args.topology:
        return load_topology(args.topology), config.base_seed
    scenario = _parse_scenario(args.scenario)
    seed = args.seed if args.seed is not None else scenario.get("seed", config.base_seed)
    spec = config.scenario(seed)
    if "M" in scenario:
        spec = dataclasses.replace(spec, num_nodes=scenario["M"])
    if "area_km" in scenario:
        spec = dataclasses.replace(spec, area_km=scenario["area_km"])
    if "predeploy_ratio" in scenario:
        spec = dataclasses.replace(spec, predeploy_ratio=scenario["predeploy_ratio"])
    return generate_scenario(spec), seed


def cmd_plan(args: argparse.Namespace) -> int:
    config, _ = _load_config(args)
    topology, seed = _resolve_topology(args, config)
    method = _METHOD_TOKENS[args.method]
    cost_model = config.cost_model()
    rate_model = config.rate_model()

    diagnostics: dict = {}
    budget_exhausted = False
    if method == "of_only":
        plan = plan_of_only(topology, cost_model)
    elif method == "hybrid":
        result = plan_hybrid(
            topology,
            cost_model,
            rate_model,
            neighbor_policy=config.neighbor_policy,
            neighbor_cap=config.neighbor_cap,
        )
        plan = result.plan
        diagnostics = result.diagnostics.as_dict()
    else:
        if topology.num_nodes > config.exact_cap and config.exact_budget is None:
            raise ValueError(
                f"exact method refused at M={topology.num_nodes} above cap "
                f"{config.exact_cap}; pass --budget to bound the search instead"
            )
        exact = plan_exact(
            topology,
            cost_model,
            rate_model,
            budget=config.exact_budget,
            strong_bound=config.exact_strong_bound,
        )
        plan = exact.plan
        budget_exhausted = not exact.optimal
        diagnostics = {"optimal": exact.optimal, **exact.stats.as_dict()}

    report = check_feasible(topology, plan, rate_model)
    cost = plan_cost(plan, cost_model)
    try:
        pct = percent_of_links(plan, exclude_predeployed=config.exclude_predeployed)
    except ValueError:
        pct = None
    payload = {
        "method": method,
        "num_nodes": topology.num_nodes,
        "seed": seed,
        "cost_usd": cost,
        "cost_incl_predeployed_usd": plan_cost(
            plan, cost_model, include_predeployed=True
        ),
        "pct_of": pct,
        "feasible": report.ok,
        "feasibility": report.as_dict(),
        "diagnostics": diagnostics,
        "plan": plan_to_dict(plan, total_cost=cost),
    }
    out = Path(args.out or "plan.json")
    out.write_text(json.dumps(payload, indent=2) + "\n")

    print(f"method:   {method}")
    print(f"stations: {topology.num_nodes}")
    print(f"cost:     {cost:.2f} $ (new deployment)")
    print(f"fiber:    {'n/a' if pct is None else f'{pct:.1f}%'}")
    print(f"feasible: {report.ok}")
    print(f"report:   {out}")
    if not report.ok:
        for check in report.failures():
            print(f"infeasible: {check.constraint}: {check.detail}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if budget_exhausted:
        raise BudgetExhaustedError(
            f"exact search stopped at the node budget ({config.exact_budget}); "
            f"the written plan is feasible but not proven optimal"
        )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.config:
        raise ValueError("sweep requires --config with a sweep block")
    config, sweep = _load_config(args)
    if sweep is None:
        raise ValueError(f"config {args.config} has no sweep block")
    trials = args.trials if args.trials is not None else sweep.get("trials", 100)
    methods = tuple(sweep.get("methods", METHODS))
    results = run_sweep(
        sweep["variable"],
        list(sweep["grid"]),
        config,
        trials,
        methods,
        workers=args.workers,
    )
    out = Path(args.out or "sweep.csv")
    out.write_text(render_sweep_csv(results, timing=not args.no_timing))

    print(f"{'x':>10}  {'method':<8}  {'mean_cost':>12}  {'se':>10}  {'pct_of':>7}  "
          f"{'trials':>6}  {'infeas':>6}  {'wall_ms':>8}")
    for r in results:
        print(
            f"{r.x:>10}  {r.method:<8}  {r.mean_cost_usd:>12.2f}  {r.se_cost:>10.2f}  "
            f"{r.mean_pct_of:>7.2f}  {r.trials:>6}  {r.infeasible:>6}  {r.wall_ms:>8}"
        )
    print(f"csv: {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(args)
        return cmd_sweep(args)
    except BudgetExhaustedError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NeighborLimitError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
