"""Exact minimum-cost planning by ternary branch and bound.

Every non-pre-deployed station pair takes one of three values (no link,
fiber, hybrid), so the full problem is a search over 3^(free pairs)
assignments.  The solver walks that space depth-first, pairs ordered by
ascending fiber price, seeded with the fiber-only optimum as incumbent, and
prunes on three fronts: committed cost (optionally tightened by a cheapest-
completion bound), connectivity that can no longer be restored, and
per-station demands that a fully decided station row already violates.

The search is exhaustive up to pruning, so with an unlimited budget the
returned plan is a true optimum; with a node budget the best incumbent is
returned and flagged non-optimal.

:func:`check_feasible` is the standalone judge for any plan or raw link
matrix: one verdict per constraint family with the violating stations or
pairs named, using the exact (non-linearized) reliability product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .connectivity import FIEDLER_TOL, DisjointSet
from .fiber_planner import plan_of_only
from .link_models import CostModel, LinkTables, RateReliabilityModel
from .topology import LinkKind, Plan, Topology

logger = logging.getLogger(__name__)

# Constraint-boundary slack.  A station served by exactly one fiber link sits
# exactly on both demand boundaries; these keep float rounding there from
# flipping the verdict.  Rate slack is relative to the target, reliability
# slack absolute on the availability level.
RATE_REL_TOL = 1e-12
RELIABILITY_ABS_TOL = 1e-12

# Free-pair ceiling for unbudgeted exact solves (M = 9 with no pre-deploys).
MAX_FREE_PAIRS = 36


@dataclass(frozen=True)
class SearchStats:
    """Branch-and-bound effort counters."""

    nodes_expanded: int
    pruned_bound: int
    pruned_connectivity: int
    pruned_constraints: int

    def as_dict(self) -> dict:
        return {
            "nodes_expanded": self.nodes_expanded,
            "pruned_bound": self.pruned_bound,
            "pruned_connectivity": self.pruned_connectivity,
            "pruned_constraints": self.pruned_constraints,
        }


@dataclass(frozen=True)
class ExactResult:
    """Outcome of an exact solve.

    ``cost`` is the newly-added deployment cost in $ (pre-deployed fiber is
    sunk and never counted).  ``optimal`` is False only when a node budget
    ran out before the search space was exhausted.
    """

    plan: Plan
    cost: float
    optimal: bool
    stats: SearchStats


def plan_exact(
    topology: Topology,
    cost_model: CostModel,
    rate_model: RateReliabilityModel,
    *,
    budget: int | None = None,
    strong_bound: bool = False,
    max_free_pairs: int = MAX_FREE_PAIRS,
) -> ExactResult:
    """Minimum-cost plan meeting rate, reliability, and connectivity demands.

    Args:
        topology: stations and forced fiber.
        cost_model: link prices.
        rate_model: performance curves and per-station targets.
        budget: optional cap on search-tree nodes; when it runs out the best
            plan found so far is returned with ``optimal=False``.
        strong_bound: additionally bound each branch by the cheapest possible
            cost of reconnecting the remaining components (a minimum spanning
            tree over the still-undecided pairs).  Never changes the result,
            often shrinks the tree by orders of magnitude; off by default so
            the plain search stays the reference behavior.
        max_free_pairs: refuse unbudgeted solves beyond this many undecided
            pairs, as a guard against accidental 3^n blowups.

    Raises:
        ValueError: too many free pairs without a budget.
    """
    m = topology.num_nodes
    if m == 1:
        return ExactResult(
            plan=Plan.empty(topology),
            cost=0.0,
            optimal=True,
            stats=SearchStats(0, 0, 0, 0),
        )

    tables = LinkTables.build(topology, cost_model, rate_model)
    pre = topology.predeployed
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m) if not pre[i, j]]
    pairs.sort(key=lambda p: (float(tables.of_cost[p]), p))
    n = len(pairs)
    if budget is None and n > max_free_pairs:
        raise ValueError(
            f"{n} free pairs exceed the unbudgeted limit of {max_free_pairs}; "
            "pass a node budget to search anyway"
        )

    of_c = [float(tables.of_cost[p]) for p in pairs]
    hy_c = [float(tables.hybrid_cost[p]) for p in pairs]
    rate_h = [float(tables.rate[p]) for p in pairs]
    rel_h = [float(tables.reliability[p]) for p in pairs]
    target_rate = rate_model.target_rate
    alpha = rate_model.target_reliability
    rate_floor = target_rate * (1.0 - RATE_REL_TOL)
    # product form of the availability demand: prod(1 - R) <= 1 - alpha
    unrel_ceiling = (1.0 - alpha) + RELIABILITY_ABS_TOL

    node_pairs: list[list[int]] = [[] for _ in range(m)]
    for k, (i, j) in enumerate(pairs):
        node_pairs[i].append(k)
        node_pairs[j].append(k)
    undecided = [len(node_pairs[u]) for u in range(m)]
    of_count = [int(pre[u].sum()) for u in range(m)]

    # incumbent: the fiber-only optimum, always feasible and in-space
    base = plan_of_only(topology, cost_model)
    base_new = base.of_matrix() & ~pre
    best_z = [1 if base_new[p] else 0 for p in pairs]
    best_cost = 0.0
    for k in range(n):
        if best_z[k]:
            best_cost += of_c[k]

    dsu = DisjointSet(m)
    for i, j in topology.predeployed_pairs():
        dsu.union(i, j)

    # pairs by cheapest technology, for the completion bound
    min_c = [min(of_c[k], hy_c[k]) for k in range(n)]
    completion_order = sorted(range(n), key=lambda k: (min_c[k], pairs[k]))

    z = [0] * n
    expanded = 0
    pruned_bound = 0
    pruned_connectivity = 0
    pruned_constraints = 0
    exhausted = False

    def completion_cost(k_next: int) -> float | None:
        """Cheapest cost to reconnect using pairs not yet decided, or None.

        Kruskal over the undecided suffix with each pair at its cheaper
        technology — a lower bound on what any feasible completion adds.
        """
        comps = dsu.num_components
        if comps == 1:
            return 0.0
        parent = dsu.parent.copy()

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        total = 0.0
        for k in completion_order:
            if k < k_next:
                continue
            i, j = pairs[k]
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
                total += min_c[k]
                comps -= 1
                if comps == 1:
                    return total
        return None

    def row_ok(u: int) -> bool:
        """Demand check for a station whose row is fully decided.

        One fiber link meets both demands outright; otherwise the hybrid
        links must cover the rate sum and the availability product.
        """
        if of_count[u] >= 1:
            return True
        rate_sum = 0.0
        unrel = 1.0
        for k in node_pairs[u]:
            if z[k] == 2:
                rate_sum += rate_h[k]
                unrel *= 1.0 - rel_h[k]
        return rate_sum >= rate_floor and unrel <= unrel_ceiling

    def descend(k: int, cost: float) -> None:
        nonlocal best_cost, best_z, expanded, exhausted
        nonlocal pruned_bound, pruned_connectivity, pruned_constraints
        if exhausted:
            return
        if budget is not None and expanded >= budget:
            exhausted = True
            return
        expanded += 1
        if k == n:
            # parent already enforced cost < best_cost and connectivity
            best_cost = cost
            best_z = z.copy()
            return
        i, j = pairs[k]
        for v in (0, 1, 2):
            added = 0.0 if v == 0 else (of_c[k] if v == 1 else hy_c[k])
            ncost = cost + added
            if ncost >= best_cost:
                pruned_bound += 1
                continue
            mark = dsu.snapshot()
            if v:
                dsu.union(i, j)
            z[k] = v
            undecided[i] -= 1
            undecided[j] -= 1
            if v == 1:
                of_count[i] += 1
                of_count[j] += 1
            feasible_so_far = True
            if undecided[i] == 0 and not row_ok(i):
                feasible_so_far = False
            if feasible_so_far and undecided[j] == 0 and not row_ok(j):
                feasible_so_far = False
            if not feasible_so_far:
                pruned_constraints += 1
            else:
                finish = completion_cost(k + 1)
                if finish is None:
                    pruned_connectivity += 1
                elif strong_bound and ncost + finish >= best_cost:
                    pruned_bound += 1
                else:
                    descend(k + 1, ncost)
            z[k] = 0
            undecided[i] += 1
            undecided[j] += 1
            if v == 1:
                of_count[i] -= 1
                of_count[j] -= 1
            dsu.rollback(mark)
            if exhausted:
                return

    descend(0, 0.0)

    links = np.zeros((m, m), dtype=np.int8)
    links[pre] = LinkKind.OF
    for k, v in enumerate(best_z):
        if v:
            i, j = pairs[k]
            links[i, j] = links[j, i] = LinkKind.OF if v == 1 else LinkKind.HYBRID
    plan = Plan(topology=topology, links=links)
    stats = SearchStats(
        nodes_expanded=expanded,
        pruned_bound=pruned_bound,
        pruned_connectivity=pruned_connectivity,
        pruned_constraints=pruned_constraints,
    )
    if exhausted:
        logger.warning(
            "exact search budget of %d nodes exhausted; returning best found "
            "(cost %.2f, not proven optimal)",
            budget,
            best_cost,
        )
    return ExactResult(plan=plan, cost=best_cost, optimal=not exhausted, stats=stats)


@dataclass(frozen=True)
class ConstraintCheck:
    """Verdict for one constraint family."""

    constraint: str
    ok: bool
    detail: str
    violations: tuple = ()

    def as_dict(self) -> dict:
        return {
            "constraint": self.constraint,
            "ok": self.ok,
            "detail": self.detail,
            "violations": list(self.violations),
        }


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-constraint verdicts for one candidate plan."""

    checks: tuple[ConstraintCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> tuple[ConstraintCheck, ...]:
        return tuple(c for c in self.checks if not c.ok)

    def __getitem__(self, constraint: str) -> ConstraintCheck:
        for c in self.checks:
            if c.constraint == constraint:
                return c
        raise KeyError(constraint)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.as_dict() for c in self.checks]}


def check_feasible(
    topology: Topology,
    plan: Union[Plan, np.ndarray],
    rate_model: RateReliabilityModel,
) -> FeasibilityReport:
    """Judge a plan (or raw link-kind matrix) against every demand.

    Accepts a raw matrix so that structurally invalid candidates — the kind
    ``Plan`` construction refuses — can still be diagnosed.  Demands on
    single-station topologies are vacuous and pass.

    Reliability uses the exact product form ``1 - prod(1 - X*alpha)(1 - Y*R)
    >= alpha`` with absolute slack ``RELIABILITY_ABS_TOL``, not any
    linearization.
    """
    links = plan.links if isinstance(plan, Plan) else np.asarray(plan)
    m = topology.num_nodes
    if links.shape != (m, m):
        raise ValueError(f"link matrix must be ({m}, {m}), got shape {links.shape}")
    checks: list[ConstraintCheck] = []

    sym_ok = bool(np.array_equal(links, links.T)) and not links.diagonal().any()
    kinds_ok = bool(np.isin(links, (0, 1, 2)).all())
    sym_pairs: tuple = ()
    if not sym_ok:
        ii, jj = np.nonzero((links != links.T) | np.diag(links.diagonal() != 0))
        sym_pairs = tuple(zip(ii.tolist(), jj.tolist()))[:8]
    checks.append(
        ConstraintCheck(
            constraint="symmetry",
            ok=sym_ok and kinds_ok,
            detail="links must be symmetric, self-link free, and use known kinds",
            violations=sym_pairs,
        )
    )

    checks.append(
        ConstraintCheck(
            constraint="exclusivity",
            ok=True,
            detail="one technology slot per pair; dual deployment unrepresentable",
        )
    )

    missing = topology.predeployed & (links != LinkKind.OF)
    ii, jj = np.nonzero(np.triu(missing, k=1))
    missing_pairs = tuple(zip(ii.tolist(), jj.tolist()))
    checks.append(
        ConstraintCheck(
            constraint="predeployed",
            ok=not missing_pairs,
            detail="every pre-deployed fiber link must stay deployed as fiber",
            violations=missing_pairs,
        )
    )

    rate_viol: list[tuple[int, float]] = []
    rel_viol: list[tuple[int, float]] = []
    if m >= 2:
        d = topology.distances
        decay_m = 1000.0 * rate_model.decay_km
        rates = np.where(
            d < rate_model.rate_plateau_m,
            rate_model.target_rate,
            rate_model.target_rate * np.exp(-(d - rate_model.rate_plateau_m) / decay_m),
        )
        plateau = rate_model.plateau_reliability_value
        rels = np.where(
            d < rate_model.reliability_plateau_m,
            plateau,
            plateau * np.exp(-(d - rate_model.reliability_plateau_m) / decay_m),
        )
        alpha = rate_model.target_reliability
        for u in range(m):
            rate_sum = 0.0
            unrel = 1.0
            for v in range(m):
                if v == u:
                    continue
                kind = int(links[u, v])
                if kind == LinkKind.OF:
                    rate_sum += rate_model.target_rate
                    unrel *= 1.0 - alpha
                elif kind == LinkKind.HYBRID:
                    rate_sum += float(rates[u, v])
                    unrel *= 1.0 - float(rels[u, v])
            if rate_sum < rate_model.target_rate * (1.0 - RATE_REL_TOL):
                rate_viol.append((u, rate_sum))
            if 1.0 - unrel < alpha - RELIABILITY_ABS_TOL:
                rel_viol.append((u, 1.0 - unrel))
    checks.append(
        ConstraintCheck(
            constraint="rate",
            ok=not rate_viol,
            detail="per-station throughput must reach the target rate",
            violations=tuple(rate_viol),
        )
    )
    checks.append(
        ConstraintCheck(
            constraint="reliability",
            ok=not rel_viol,
            detail="per-station availability product must reach the target level",
            violations=tuple(rel_viol),
        )
    )

    if m == 1:
        connected = True
        fiedler_note = "single station; Fiedler value undefined"
    else:
        dsu = DisjointSet(m)
        ii, jj = np.nonzero(np.triu(links, k=1))
        for i, j in zip(ii.tolist(), jj.tolist()):
            dsu.union(i, j)
        connected = dsu.num_components == 1
        adj = (np.asarray(links) != 0).astype(np.float64)
        lap = np.diag(adj.sum(axis=1)) - adj
        lam2 = float(np.linalg.eigvalsh(lap)[1])
        fiedler_note = (
            f"Fiedler value {lam2:.6g} vs threshold {FIEDLER_TOL:g}; "
            f"{dsu.num_components} component(s)"
        )
    checks.append(
        ConstraintCheck(
            constraint="connectivity",
            ok=connected,
            detail=fiedler_note,
        )
    )
    return FeasibilityReport(checks=tuple(checks))
