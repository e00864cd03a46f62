"""Seeded scenario generation and Monte-Carlo planner comparisons.

Scenarios place stations uniformly in a square service area and pre-deploy
fiber on a fixed fraction of the station pairs.  Sweeps rerun the selected
planners over a grid of one experiment variable with common random numbers:
trial ``k`` uses seed ``base_seed + k`` at every grid value and for every
method, so method and grid comparisons are paired and the fiber-only curve
is exactly flat across variables it does not depend on.

Results aggregate to one CSV row per (grid value, method) with the fixed
schema ``x,method,mean_cost_usd,se_cost,mean_pct_of,trials,infeasible,
wall_ms``.  Budget-exhausted exact solves are counted in ``infeasible`` and
excluded from the means rather than polluting them.  Trials are independent
tasks; pass ``workers`` to spread them over a process pool.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter

import numpy as np

from .clique_planner import DEFAULT_NEIGHBOR_CAP, plan_hybrid
from .exact_planner import plan_exact
from .fiber_planner import plan_of_only
from .link_models import CostModel, RateReliabilityModel, plan_cost
from .topology import LinkKind, Plan, Topology, build_topology

logger = logging.getLogger(__name__)

SWEEP_VARIABLES = ("M", "hybrid_cost", "d_D", "d_R", "alpha")
METHODS = ("of_only", "hybrid", "exact")
CSV_HEADER = "x,method,mean_cost_usd,se_cost,mean_pct_of,trials,infeasible,wall_ms"


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for one random deployment site."""

    seed: int
    num_nodes: int
    area_km: float = 5.0
    predeploy_ratio: float = 0.2

    def __post_init__(self) -> None:
        if self.num_nodes < 2:
            raise ValueError(f"scenarios need at least 2 stations, got {self.num_nodes}")
        if not (math.isfinite(self.area_km) and self.area_km > 0):
            raise ValueError(f"area_km must be positive, got {self.area_km}")
        if not 0.0 <= self.predeploy_ratio <= 1.0:
            raise ValueError(
                f"predeploy_ratio must lie in [0, 1], got {self.predeploy_ratio}"
            )


def generate_scenario(spec: ScenarioSpec) -> Topology:
    """Sample a topology: uniform station positions, random pre-deployed fiber.

    ``floor(ratio * M(M-1)/2)`` distinct pairs are pre-deployed.  Fully
    deterministic in the seed; the draw order (positions first, then pairs)
    is part of the contract so identical seeds reproduce identical sites.
    """
    rng = np.random.default_rng(spec.seed)
    side_m = spec.area_km * 1000.0
    coords = rng.uniform(0.0, side_m, size=(spec.num_nodes, 2))
    m = spec.num_nodes
    all_pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    num_pre = int(spec.predeploy_ratio * len(all_pairs))
    if num_pre:
        picked = rng.choice(len(all_pairs), size=num_pre, replace=False)
        pre_pairs = [all_pairs[idx] for idx in sorted(picked.tolist())]
    else:
        pre_pairs = []
    return build_topology(coords.tolist(), pre_pairs)


def percent_of_links(plan: Plan, *, exclude_predeployed: bool = False) -> float:
    """Share of deployed links that are fiber, in percent.

    Counts every deployed link by default; ``exclude_predeployed`` restricts
    both numerator and denominator to newly added links.

    Raises:
        ValueError: when no links remain to take a percentage of.
    """
    pre = plan.topology.predeployed
    fiber = 0
    total = 0
    for i, j, kind in plan.link_pairs():
        if exclude_predeployed and pre[i, j]:
            continue
        total += 1
        if kind == LinkKind.OF:
            fiber += 1
    if total == 0:
        raise ValueError("plan has no links to take a fiber percentage of")
    return 100.0 * fiber / total


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration mirroring the config-file keys.

    Distances ``d_D_km``/``d_R_km`` are in kilometers here (file/CLI
    convention) and converted to meters when the models are built.
    """

    num_nodes: int = 7
    area_km: float = 5.0
    predeploy_ratio: float = 0.2
    base_seed: int = 1
    of_per_meter: float = 13.5
    hybrid_cost: float = 10_000.0
    target_rate: float = 100.0
    d_D_km: float = 3.0
    d_R_km: float = 2.0
    alpha: float = 0.9
    decay_km: float = 1.0
    neighbor_policy: str = "eq4"
    neighbor_cap: int = DEFAULT_NEIGHBOR_CAP
    exact_cap: int = 7
    exact_budget: int | None = None
    exact_strong_bound: bool = True
    exclude_predeployed: bool = False

    def scenario(self, seed: int) -> ScenarioSpec:
        return ScenarioSpec(
            seed=seed,
            num_nodes=self.num_nodes,
            area_km=self.area_km,
            predeploy_ratio=self.predeploy_ratio,
        )

    def cost_model(self) -> CostModel:
        return CostModel(of_per_meter=self.of_per_meter, hybrid_price=self.hybrid_cost)

    def rate_model(self) -> RateReliabilityModel:
        return RateReliabilityModel(
            target_rate=self.target_rate,
            rate_plateau_m=1000.0 * self.d_D_km,
            target_reliability=self.alpha,
            reliability_plateau_m=1000.0 * self.d_R_km,
            decay_km=self.decay_km,
        )


_CONFIG_SCENARIO_KEYS = {"M": "num_nodes", "area_km": "area_km", "predeploy_ratio": "predeploy_ratio"}
_CONFIG_MODEL_KEYS = (
    "of_per_meter",
    "hybrid_cost",
    "target_rate",
    "d_D_km",
    "d_R_km",
    "alpha",
    "decay_km",
)
_CONFIG_EXACT_KEYS = {"cap": "exact_cap", "budget": "exact_budget", "strong_bound": "exact_strong_bound"}
_SWEEP_KEYS = {"variable", "grid", "trials", "methods"}


def config_from_dict(payload: dict) -> tuple[ExperimentConfig, dict | None]:
    """Parse a config-file payload into a config plus optional sweep block.

    Strict about key names so that typos surface as usage errors instead of
    silently falling back to defaults.
    """
    if not isinstance(payload, dict):
        raise ValueError("config must be a JSON object")
    fields: dict = {}
    top_allowed = {"scenario", "models", "sweep", "exact", "base_seed", "neighbor_policy", "neighbor_cap", "exclude_predeployed", "description"}
    unknown = set(payload) - top_allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    scenario = payload.get("scenario", {})
    bad = set(scenario) - set(_CONFIG_SCENARIO_KEYS)
    if bad:
        raise ValueError(f"unknown scenario keys: {sorted(bad)}")
    for key, attr in _CONFIG_SCENARIO_KEYS.items():
        if key in scenario:
            fields[attr] = scenario[key]
    models = payload.get("models", {})
    bad = set(models) - set(_CONFIG_MODEL_KEYS)
    if bad:
        raise ValueError(f"unknown model keys: {sorted(bad)}")
    fields.update({k: models[k] for k in _CONFIG_MODEL_KEYS if k in models})
    exact = payload.get("exact", {})
    bad = set(exact) - set(_CONFIG_EXACT_KEYS)
    if bad:
        raise ValueError(f"unknown exact-solver keys: {sorted(bad)}")
    for key, attr in _CONFIG_EXACT_KEYS.items():
        if key in exact:
            fields[attr] = exact[key]
    for key in ("base_seed", "neighbor_policy", "neighbor_cap", "exclude_predeployed"):
        if key in payload:
            fields[key] = payload[key]
    config = ExperimentConfig(**fields)
    sweep = payload.get("sweep")
    if sweep is not None:
        bad = set(sweep) - _SWEEP_KEYS
        if bad:
            raise ValueError(f"unknown sweep keys: {sorted(bad)}")
        missing = {"variable", "grid"} - set(sweep)
        if missing:
            raise ValueError(f"sweep block missing keys: {sorted(missing)}")
    return config, sweep


@dataclass(frozen=True)
class SweepResult:
    """One CSV row: aggregates for one method at one grid value."""

    x: float
    method: str
    mean_cost_usd: float
    se_cost: float
    mean_pct_of: float
    trials: int
    infeasible: int
    wall_ms: int


@dataclass(frozen=True)
class _TrialOutcome:
    method: str
    cost: float
    pct_of: float | None
    feasible: bool
    wall_ms: float


def _cell_config(config: ExperimentConfig, variable: str, x: float) -> ExperimentConfig:
    if variable == "M":
        return dataclasses.replace(config, num_nodes=int(x))
    if variable == "hybrid_cost":
        return dataclasses.replace(config, hybrid_cost=float(x))
    if variable == "d_D":
        return dataclasses.replace(config, d_D_km=float(x))
    if variable == "d_R":
        return dataclasses.replace(config, d_R_km=float(x))
    if variable == "alpha":
        return dataclasses.replace(config, alpha=float(x))
    raise ValueError(f"unknown sweep variable {variable!r}; known: {SWEEP_VARIABLES}")


def _run_trial(
    cell: ExperimentConfig, seed: int, methods: tuple[str, ...]
) -> list[_TrialOutcome]:
    """All requested planners on the trial's topology, common random numbers."""
    topology = generate_scenario(cell.scenario(seed))
    cost_model = cell.cost_model()
    rate_model = cell.rate_model()
    fiber: Plan | None = None
    outcomes = []
    for method in methods:
        start = perf_counter()
        feasible = True
        if method == "of_only":
            if fiber is None:
                fiber = plan_of_only(topology, cost_model)
            plan = fiber
        elif method == "hybrid":
            if fiber is None:
                fiber = plan_of_only(topology, cost_model)
            plan = plan_hybrid(
                topology,
                cost_model,
                rate_model,
                neighbor_policy=cell.neighbor_policy,
                neighbor_cap=cell.neighbor_cap,
                fiber_plan=fiber,
            ).plan
        elif method == "exact":
            result = plan_exact(
                topology,
                cost_model,
                rate_model,
                budget=cell.exact_budget,
                strong_bound=cell.exact_strong_bound,
            )
            plan = result.plan
            feasible = result.optimal
        else:
            raise ValueError(f"unknown method {method!r}; known: {METHODS}")
        cost = plan_cost(plan, cost_model)
        try:
            pct = percent_of_links(plan, exclude_predeployed=cell.exclude_predeployed)
        except ValueError:
            pct = None
        wall_ms = 1000.0 * (perf_counter() - start)
        outcomes.append(
            _TrialOutcome(
                method=method, cost=cost, pct_of=pct, feasible=feasible, wall_ms=wall_ms
            )
        )
    return outcomes


def run_sweep(
    variable: str,
    grid: list,
    config: ExperimentConfig,
    trials: int,
    methods: tuple[str, ...] = METHODS,
    *,
    workers: int = 1,
) -> list[SweepResult]:
    """Sweep one experiment variable and aggregate per (grid value, method).

    Trial ``k`` uses seed ``base_seed + k`` everywhere — paired comparisons
    across methods and grid values.  Exact solves that exhaust their budget
    count as infeasible and are excluded from the means.

    Raises:
        ValueError: unknown variable/method, empty grid, non-positive
            trials, or the exact method requested beyond its station cap.
    """
    if variable not in SWEEP_VARIABLES:
        raise ValueError(f"unknown sweep variable {variable!r}; known: {SWEEP_VARIABLES}")
    if not grid:
        raise ValueError("sweep grid must not be empty")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}; known: {METHODS}")
    if not methods:
        raise ValueError("at least one method is required")
    if "exact" in methods:
        peak_m = max(int(x) for x in grid) if variable == "M" else config.num_nodes
        if peak_m > config.exact_cap:
            raise ValueError(
                f"exact method refused at M={peak_m} above cap {config.exact_cap}; "
                "raise exact_cap deliberately if you accept the runtime"
            )

    results: list[SweepResult] = []
    for x in grid:
        cell = _cell_config(config, variable, x)
        seeds = [config.base_seed + k for k in range(trials)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                per_trial = list(
                    pool.map(_run_trial, [cell] * trials, seeds, [methods] * trials)
                )
        else:
            per_trial = [_run_trial(cell, seed, methods) for seed in seeds]
        for mi, method in enumerate(methods):
            outcomes = [trial[mi] for trial in per_trial]
            good = [o for o in outcomes if o.feasible]
            costs = [o.cost for o in good]
            mean, se = _mean_se(costs)
            pcts = [o.pct_of for o in good if o.pct_of is not None]
            mean_pct = sum(pcts) / len(pcts) if pcts else float("nan")
            results.append(
                SweepResult(
                    x=x,
                    method=method,
                    mean_cost_usd=mean,
                    se_cost=se,
                    mean_pct_of=mean_pct,
                    trials=len(good),
                    infeasible=len(outcomes) - len(good),
                    wall_ms=int(round(sum(o.wall_ms for o in outcomes))),
                )
            )
    return results


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return float("nan"), float("nan")
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _fmt(value: float) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def render_sweep_csv(results: list[SweepResult], *, timing: bool = True) -> str:
    """CSV text for sweep results; ``timing=False`` zeroes wall_ms.

    Wall-clock is the one honest non-reproducible column, so determinism
    checks and archived tables use ``timing=False``.
    """
    lines = [CSV_HEADER]
    for r in results:
        lines.append(
            ",".join(
                [
                    _fmt(r.x),
                    r.method,
                    _fmt(r.mean_cost_usd),
                    _fmt(r.se_cost),
                    _fmt(r.mean_pct_of),
                    str(r.trials),
                    str(r.infeasible),
                    str(r.wall_ms if timing else 0),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(
    results: list[SweepResult], path: str | Path, *, timing: bool = True
) -> None:
    Path(path).write_text(render_sweep_csv(results, timing=timing))
