"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from backhaul_planner import (
    CostModel,
    LinkKind,
    Plan,
    RateReliabilityModel,
    Topology,
    build_topology,
)


def default_cost_model(hybrid_price: float = 10_000.0) -> CostModel:
    return CostModel(of_per_meter=13.5, hybrid_price=hybrid_price)


def default_rate_model(
    *,
    alpha: float = 0.9,
    d_d_km: float = 3.0,
    d_r_km: float = 2.0,
    decay_km: float = 1.0,
    plateau_reliability: float | None = None,
) -> RateReliabilityModel:
    return RateReliabilityModel(
        target_rate=100.0,
        rate_plateau_m=1000.0 * d_d_km,
        target_reliability=alpha,
        reliability_plateau_m=1000.0 * d_r_km,
        decay_km=decay_km,
        plateau_reliability=plateau_reliability,
    )


def random_topology(
    rng: np.random.Generator,
    num_nodes: int,
    *,
    side_m: float = 5000.0,
    predeploy_ratio: float = 0.2,
) -> Topology:
    """Random site with the same texture as generated scenarios."""
    coords = rng.uniform(0.0, side_m, size=(num_nodes, 2))
    pairs = [(i, j) for i in range(num_nodes) for j in range(i + 1, num_nodes)]
    num_pre = int(predeploy_ratio * len(pairs))
    pre = []
    if num_pre:
        picked = rng.choice(len(pairs), size=num_pre, replace=False)
        pre = [pairs[k] for k in sorted(picked.tolist())]
    return build_topology(coords.tolist(), pre)


def plan_with_links(
    topology: Topology, links: list[tuple[int, int, LinkKind]]
) -> Plan:
    matrix = np.zeros((topology.num_nodes, topology.num_nodes), dtype=np.int8)
    for i, j in topology.predeployed_pairs():
        matrix[i, j] = matrix[j, i] = int(LinkKind.OF)
    for i, j, kind in links:
        matrix[i, j] = matrix[j, i] = int(kind)
    return Plan(topology=topology, links=matrix)


def kruskal_with_forced(topology: Topology, cost: np.ndarray) -> float:
    """Reference fiber optimum: MST cost over free pairs after contracting
    the pre-deployed components (classic cycle-skipping Kruskal)."""
    m = topology.num_nodes
    parent = list(range(m))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in topology.predeployed_pairs():
        parent[find(i)] = find(j)
    edges = sorted(
        (float(cost[i, j]), i, j) for i in range(m) for j in range(i + 1, m)
    )
    total = 0.0
    for w, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            total += w
    return total
