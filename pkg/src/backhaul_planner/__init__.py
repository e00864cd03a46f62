"""Backhaul planning with optical fiber and hybrid RF/FSO links.

Plan minimum-cost backhaul networks over a set of base stations: a
fiber-only optimum, a hybrid heuristic that assembles per-station local
choices into a global plan via a maximum-weight clique search, and an
exhaustive branch-and-bound reference, plus seeded Monte-Carlo sweeps and
a CLI front end.
"""

from .clique_planner import (
    DEFAULT_NEIGHBOR_CAP,
    HybridDiagnostics,
    HybridResult,
    NeighborSets,
    ReliabilitySets,
    build_neighbor_sets,
    build_reliability_sets,
    check_neighbor_assumption,
    plan_hybrid,
    reliability_threshold,
)
from .connectivity import (
    FIEDLER_TOL,
    DisjointSet,
    fiedler_value,
    is_connected,
    laplacian_matrix,
)
from .exact_planner import (
    ConstraintCheck,
    ExactResult,
    FeasibilityReport,
    SearchStats,
    check_feasible,
    plan_exact,
)
from .exceptions import (
    BudgetExhaustedError,
    InfeasibleError,
    NeighborLimitError,
    PlanningError,
)
from .experiments import (
    METHODS,
    SWEEP_VARIABLES,
    ExperimentConfig,
    ScenarioSpec,
    SweepResult,
    config_from_dict,
    generate_scenario,
    percent_of_links,
    render_sweep_csv,
    run_sweep,
    write_sweep_csv,
)
from .fiber_planner import Clustering, plan_of_only, reduce_clusters
from .link_models import (
    CostModel,
    LinkTables,
    RateReliabilityModel,
    hybrid_link_cost,
    hybrid_rate,
    hybrid_reliability,
    link_cost,
    of_link_cost,
    plan_cost,
)
from .topology import (
    LinkKind,
    Plan,
    Topology,
    build_topology,
    load_topology,
    plan_from_dict,
    plan_to_dict,
    save_topology,
    topology_from_dict,
    topology_to_dict,
    validate_links,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExhaustedError",
    "Clustering",
    "ConstraintCheck",
    "CostModel",
    "DEFAULT_NEIGHBOR_CAP",
    "DisjointSet",
    "ExactResult",
    "ExperimentConfig",
    "FIEDLER_TOL",
    "FeasibilityReport",
    "HybridDiagnostics",
    "HybridResult",
    "InfeasibleError",
    "LinkKind",
    "LinkTables",
    "METHODS",
    "NeighborLimitError",
    "NeighborSets",
    "Plan",
    "PlanningError",
    "RateReliabilityModel",
    "ReliabilitySets",
    "SWEEP_VARIABLES",
    "ScenarioSpec",
    "SearchStats",
    "SweepResult",
    "Topology",
    "build_neighbor_sets",
    "build_reliability_sets",
    "build_topology",
    "check_feasible",
    "check_neighbor_assumption",
    "config_from_dict",
    "fiedler_value",
    "generate_scenario",
    "hybrid_link_cost",
    "hybrid_rate",
    "hybrid_reliability",
    "is_connected",
    "laplacian_matrix",
    "link_cost",
    "load_topology",
    "of_link_cost",
    "percent_of_links",
    "plan_cost",
    "plan_exact",
    "plan_from_dict",
    "plan_hybrid",
    "plan_of_only",
    "plan_to_dict",
    "reduce_clusters",
    "reliability_threshold",
    "render_sweep_csv",
    "run_sweep",
    "save_topology",
    "topology_from_dict",
    "topology_to_dict",
    "validate_links",
    "write_sweep_csv",
]
