"""Cost-optimal fiber-only planning by greedy cluster merging.

With fiber as the only technology, rate and reliability demands are met by
any connected layout, so the problem collapses to connecting the stations at
minimum total trench length while keeping the pre-deployed links.  The
planner grows the pre-deployed components by repeatedly adding the globally
cheapest fiber link between two clusters — a minimum spanning tree on the
graph with pre-deployed components contracted, hence optimal.

:func:`reduce_clusters` is the planner's inverse lens, used by tests and
validators: starting from the pre-deployed components it re-merges clusters
only where the plan actually placed the cheapest connecting fiber, so a plan
reduces to a single cluster exactly when its fiber layout is merge-minimal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .connectivity import DisjointSet
from .link_models import CostModel
from .topology import LinkKind, Plan, Topology

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Clustering:
    """A partition of the stations into disjoint clusters.

    Groups are normalized to frozensets ordered by their smallest member,
    so two equal partitions compare equal.
    """

    num_nodes: int
    groups: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        groups = tuple(
            sorted((frozenset(g) for g in self.groups), key=lambda g: min(g))
        )
        seen: set[int] = set()
        for g in groups:
            if not g:
                raise ValueError("clusters must be non-empty")
            if seen & g:
                raise ValueError(f"clusters overlap on stations {sorted(seen & g)}")
            seen |= g
        if seen != set(range(self.num_nodes)):
            raise ValueError(
                f"clusters must partition all {self.num_nodes} stations, "
                f"got {sorted(seen)}"
            )
        object.__setattr__(self, "groups", groups)

    @property
    def num_clusters(self) -> int:
        return len(self.groups)


def _predeployed_components(topology: Topology) -> list[set[int]]:
    m = topology.num_nodes
    dsu = DisjointSet(m)
    for i, j in topology.predeployed_pairs():
        dsu.union(i, j)
    by_root: dict[int, set[int]] = {}
    for x in range(m):
        by_root.setdefault(dsu.find(x), set()).add(x)
    return sorted(by_root.values(), key=min)


def plan_of_only(topology: Topology, cost_model: CostModel) -> Plan:
    """Cheapest all-fiber plan keeping the pre-deployed links.

    Clusters start as the connected components of the pre-deployed fiber;
    each round links the globally cheapest inter-cluster station pair and
    merges its clusters, until one cluster remains.  Cost ties are broken
    by the lexicographically smallest ``(i, j)`` pair, making the result
    deterministic.  The returned plan is always connected and adds exactly
    ``initial clusters - 1`` new links.
    """
    m = topology.num_nodes
    links = np.zeros((m, m), dtype=np.int8)
    links[topology.predeployed] = LinkKind.OF
    if m > 1:
        cost = cost_model.of_per_meter * topology.distances
        dsu = DisjointSet(m)
        for i, j in topology.predeployed_pairs():
            dsu.union(i, j)
        while dsu.num_components > 1:
            best: tuple[float, int, int] | None = None
            for i in range(m):
                for j in range(i + 1, m):
                    if dsu.find(i) != dsu.find(j):
                        key = (float(cost[i, j]), i, j)
                        if best is None or key < best:
                            best = key
            assert best is not None
            _, bi, bj = best
            links[bi, bj] = links[bj, bi] = LinkKind.OF
            dsu.union(bi, bj)
    return Plan(topology=topology, links=links)


def _nearest_cluster(
    a: int, groups: list[set[int]], cost: np.ndarray
) -> tuple[int, tuple[int, int]] | None:
    """Index of the cluster nearest to groups[a] and the realizing pair.

    Distance between clusters is the cheapest fiber price over their station
    pairs; ties are broken by the lexicographically smallest pair, which
    makes the nearest cluster unique.
    """
    best_key: tuple[float, int, int] | None = None
    best_group = -1
    for b, other in enumerate(groups):
        if b == a:
            continue
        for x in groups[a]:
            for y in other:
                lo, hi = (x, y) if x < y else (y, x)
                key = (float(cost[lo, hi]), lo, hi)
                if best_key is None or key < best_key:
                    best_key = key
                    best_group = b
    if best_key is None:
        return None
    return best_group, (best_key[1], best_key[2])


def reduce_clusters(topology: Topology, plan: Plan, cost_model: CostModel) -> Clustering:
    """Merge clusters wherever the plan placed the cheapest connecting fiber.

    Starting from the connected components of the pre-deployed fiber (the
    planner's own starting state), two clusters merge when each is the
    other's nearest cluster *and* their cheapest connecting station pair is
    an OF link of the plan.  Hybrid links never trigger a merge.  Repeats
    until no merge applies and returns the final partition.
    """
    m = topology.num_nodes
    of = plan.of_matrix()
    cost = cost_model.of_per_meter * topology.distances
    groups = _predeployed_components(topology)
    merged = True
    while merged and len(groups) > 1:
        merged = False
        nearest = [_nearest_cluster(a, groups, cost) for a in range(len(groups))]
        for a in range(len(groups)):
            near_a = nearest[a]
            assert near_a is not None
            b, (i, j) = near_a
            near_b = nearest[b]
            assert near_b is not None
            if near_b[0] == a and of[i, j]:
                keep, absorb = (a, b) if a < b else (b, a)
                groups[keep] |= groups[absorb]
                del groups[absorb]
                groups.sort(key=min)
                merged = True
                break
    return Clustering(num_nodes=m, groups=tuple(frozenset(g) for g in groups))
