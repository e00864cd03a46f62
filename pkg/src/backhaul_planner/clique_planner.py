"""Heuristic hybrid/fiber planning via maximum-weight clique search.

The pipeline trades global optimality for a sharply smaller search space:

1. Plan a fiber-only backbone (:func:`~.fiber_planner.plan_of_only`).
2. Restrict each station to a small candidate-partner set — by default the
   stations whose hybrid price does not exceed the priciest hybrid link the
   backbone already implies for that station, closed under symmetry.
3. Enumerate every feasible *local assignment* per station: a technology
   choice toward each candidate partner that keeps the backbone pairs
   linked, meets the rate demand, and meets the availability demand in a
   conservative linear form (additive log-unavailability credits).
4. Pick one local assignment per station, pairwise consistent on shared
   pairs, with maximum total weight.  Weights are minus half the priced
   link cost, so the best consistent selection is the cheapest plan the
   restriction admits.  Consistent selections are exactly the size-M
   cliques of an M-partite compatibility graph; a branch-and-bound with
   forward checking finds the best one.

The linear availability form implies the exact product form, so the final
plan always satisfies the true constraints; the cost, not feasibility, is
where the heuristic can fall short of the exact solver.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exact_planner import RATE_REL_TOL, check_feasible
from .exceptions import InfeasibleError, NeighborLimitError
from .fiber_planner import plan_of_only
from .link_models import CostModel, LinkTables, RateReliabilityModel, plan_cost
from .topology import LinkKind, Plan, Topology

logger = logging.getLogger(__name__)

DEFAULT_NEIGHBOR_CAP = 12


def reliability_threshold(alpha: float) -> float:
    """Additive availability demand: ``-log(1 - alpha)``.

    A link of availability R contributes ``-log(1 - R) >= R`` to the log of
    the station's joint unavailability, so granting full credit only to
    links meeting the target (and raw availability R to the rest) keeps the
    additive form conservative: meeting it implies the exact product form.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"availability target must lie in (0, 1), got {alpha}")
    return -math.log1p(-alpha)


@dataclass(frozen=True)
class ReliabilitySets:
    """Partition of each station's potential partners by hybrid-link quality.

    ``reliable[i]`` holds the partners whose hybrid link to ``i`` meets the
    availability target outright (full additive credit); ``unreliable[i]``
    holds every other partner (credit limited to the raw availability).
    """

    reliable: tuple[frozenset[int], ...]
    unreliable: tuple[frozenset[int], ...]
    threshold: float


def build_reliability_sets(
    tables: LinkTables, rate_model: RateReliabilityModel
) -> ReliabilitySets:
    alpha = rate_model.target_reliability
    rel = tables.reliability
    m = rel.shape[0]
    reliable = []
    unreliable = []
    for i in range(m):
        good = frozenset(j for j in range(m) if j != i and rel[i, j] >= alpha)
        reliable.append(good)
        unreliable.append(frozenset(j for j in range(m) if j != i) - good)
    return ReliabilitySets(
        reliable=tuple(reliable),
        unreliable=tuple(unreliable),
        threshold=reliability_threshold(alpha),
    )


@dataclass(frozen=True)
class NeighborSets:
    """Per-station candidate partners, symmetric across stations.

    Invariants: ``j in neighbors[i]`` iff ``i in neighbors[j]``; the
    station's cheapest fiber partner is always included; so is every
    partner the fiber-only backbone links it to.
    """

    neighbors: tuple[frozenset[int], ...]
    closest: tuple[int, ...]


def _base_candidate_sets(
    policy: str, fiber_of: np.ndarray, tables: LinkTables
) -> list[set[int]]:
    m = fiber_of.shape[0]
    others = [set(range(m)) - {i} for i in range(m)]
    if policy == "all":
        return others
    if policy == "eq4":
        # hybrid-price threshold: partners no pricier than the costliest
        # hybrid that could replace one of the station's backbone links
        sets = []
        for i in range(m):
            linked = [j for j in range(m) if fiber_of[i, j]]
            if not linked:
                sets.append(set())
                continue
            ceiling = max(float(tables.hybrid_cost[i, j]) for j in linked)
            sets.append(
                {j for j in others[i] if float(tables.hybrid_cost[i, j]) <= ceiling}
            )
        return sets
    if policy.startswith("knn:"):
        try:
            k = int(policy.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"malformed neighbor policy {policy!r}") from None
        if k < 1:
            raise ValueError(f"knn neighbor count must be >= 1, got {k}")
        sets = []
        for i in range(m):
            # ranked by fiber price (equivalently distance): hybrid prices
            # are typically flat and would not discriminate
            ranked = sorted(others[i], key=lambda j: (float(tables.of_cost[i, j]), j))
            sets.append(set(ranked[:k]))
        return sets
    raise ValueError(f"unknown neighbor policy {policy!r}")


def build_neighbor_sets(
    topology: Topology,
    fiber_plan: Plan,
    tables: LinkTables,
    policy: str = "eq4",
) -> NeighborSets:
    """Candidate partners per station under the given policy, then closed.

    Closure: every fiber-backbone partner and the station's cheapest fiber
    partner are added, and the sets are symmetrized by union.  Widening the
    candidate sets never hurts the planner, so closure is always safe.
    """
    m = topology.num_nodes
    if m < 2:
        return NeighborSets(neighbors=(frozenset(),) * m, closest=(0,) * m)
    fiber_of = fiber_plan.of_matrix()
    sets = _base_candidate_sets(policy, fiber_of, tables)
    closest = []
    for i in range(m):
        best = min(
            (j for j in range(m) if j != i),
            key=lambda j: (float(tables.of_cost[i, j]), j),
        )
        closest.append(best)
        sets[i].add(best)
        sets[i].update(j for j in range(m) if fiber_of[i, j])
    for i in range(m):
        for j in sets[i]:
            sets[j].add(i)
    return NeighborSets(
        neighbors=tuple(frozenset(s) for s in sets), closest=tuple(closest)
    )


def check_neighbor_assumption(
    ns: NeighborSets, tables: LinkTables
) -> tuple[tuple[int, int], ...]:
    """Pairs excluded from the candidate sets that might still pay off.

    For an excluded pair, routing each endpoint to its cheapest fiber
    partner should cost no more than the excluded hybrid link would have;
    pairs violating that are returned so callers can warn that the
    restriction may cost real money (it never breaks feasibility).
    """
    m = len(ns.neighbors)
    bad = []
    for i in range(m):
        for j in range(i + 1, m):
            if j in ns.neighbors[i]:
                continue
            fiber_fallback = float(tables.of_cost[i, ns.closest[i]]) + float(
                tables.of_cost[j, ns.closest[j]]
            )
            if fiber_fallback > float(tables.hybrid_cost[i, j]):
                bad.append((i, j))
    return tuple(bad)


@dataclass(frozen=True)
class LocalAssignment:
    """One station's technology choice toward each of its candidates.

    ``weight`` is minus half the priced cost of the chosen links (halved
    because both endpoints of a pair carry it), so that summing weights over
    a consistent selection yields minus the plan cost.
    """

    owner: int
    neighbors: tuple[int, ...]
    kinds: tuple[LinkKind, ...]
    weight: float

    def choice(self, j: int) -> LinkKind:
        return self.kinds[self.neighbors.index(j)]


@dataclass(frozen=True, eq=False)
class PlanningContext:
    """Everything the local-assignment machinery needs about one instance."""

    topology: Topology
    cost_model: CostModel
    tables: LinkTables
    rate_model: RateReliabilityModel
    fiber_plan: Plan
    neighbors: NeighborSets
    reliability: ReliabilitySets
    neighbor_cap: int = DEFAULT_NEIGHBOR_CAP

    @classmethod
    def build(
        cls,
        topology: Topology,
        cost_model: CostModel,
        rate_model: RateReliabilityModel,
        *,
        neighbor_policy: str = "eq4",
        neighbor_cap: int = DEFAULT_NEIGHBOR_CAP,
        fiber_plan: Plan | None = None,
    ) -> "PlanningContext":
        if fiber_plan is None:
            fiber_plan = plan_of_only(topology, cost_model)
        tables = LinkTables.build(topology, cost_model, rate_model)
        ns = build_neighbor_sets(topology, fiber_plan, tables, policy=neighbor_policy)
        rs = build_reliability_sets(tables, rate_model)
        return cls(
            topology=topology,
            cost_model=cost_model,
            tables=tables,
            rate_model=rate_model,
            fiber_plan=fiber_plan,
            neighbors=ns,
            reliability=rs,
            neighbor_cap=neighbor_cap,
        )


def enumerate_local_assignments(ctx: PlanningContext, i: int) -> list[LocalAssignment]:
    """All feasible local assignments of station ``i``, in deterministic order.

    Per candidate partner the admissible kinds are: pre-deployed pair →
    fiber only; fiber-backbone pair → fiber or hybrid (the backbone pair
    must stay linked so the plan stays connected); otherwise all three.
    An assignment survives when the rate sum reaches the target and the
    additive availability credits reach the threshold.

    Enumeration order is lexicographic over partners sorted ascending with
    kind order none < fiber < hybrid, so the result order is reproducible.

    Raises:
        NeighborLimitError: when the candidate set exceeds the cap.
    """
    partners = sorted(ctx.neighbors.neighbors[i])
    if len(partners) > ctx.neighbor_cap:
        raise NeighborLimitError(
            f"station {i} has {len(partners)} candidate partners, above the cap "
            f"of {ctx.neighbor_cap}; use a tighter neighbor policy (e.g. knn:k) "
            "or raise the cap deliberately"
        )
    pre = ctx.topology.predeployed
    fiber_of = ctx.fiber_plan.of_matrix()
    thr = ctx.reliability.threshold
    reliable = ctx.reliability.reliable[i]
    target_rate = ctx.rate_model.target_rate
    rate_floor = target_rate * (1.0 - RATE_REL_TOL)
    avail_floor = thr * (1.0 - RATE_REL_TOL)

    domains: list[tuple[LinkKind, ...]] = []
    # per-slot, per-kind contributions: (cost, rate, availability credit)
    contrib: list[dict[LinkKind, tuple[float, float, float]]] = []
    for j in partners:
        if pre[i, j]:
            domain = (LinkKind.OF,)
        elif fiber_of[i, j]:
            domain = (LinkKind.OF, LinkKind.HYBRID)
        else:
            domain = (LinkKind.NONE, LinkKind.OF, LinkKind.HYBRID)
        domains.append(domain)
        hybrid_credit = thr if j in reliable else float(ctx.tables.reliability[i, j])
        contrib.append(
            {
                LinkKind.NONE: (0.0, 0.0, 0.0),
                LinkKind.OF: (float(ctx.tables.of_cost[i, j]), target_rate, thr),
                LinkKind.HYBRID: (
                    float(ctx.tables.hybrid_cost[i, j]),
                    float(ctx.tables.rate[i, j]),
                    hybrid_credit,
                ),
            }
        )

    n = len(partners)
    suffix_rate = [0.0] * (n + 1)
    suffix_avail = [0.0] * (n + 1)
    for s in range(n - 1, -1, -1):
        best_rate = max(contrib[s][k][1] for k in domains[s])
        best_avail = max(contrib[s][k][2] for k in domains[s])
        suffix_rate[s] = suffix_rate[s + 1] + best_rate
        suffix_avail[s] = suffix_avail[s + 1] + best_avail

    out: list[LocalAssignment] = []
    kinds: list[LinkKind] = [LinkKind.NONE] * n

    def recurse(s: int, cost: float, rate: float, avail: float) -> None:
        if rate + suffix_rate[s] < rate_floor or avail + suffix_avail[s] < avail_floor:
            return
        if s == n:
            out.append(
                LocalAssignment(
                    owner=i,
                    neighbors=tuple(partners),
                    kinds=tuple(kinds),
                    weight=-0.5 * cost,
                )
            )
            return
        for kind in domains[s]:
            c, r, a = contrib[s][kind]
            kinds[s] = kind
            recurse(s + 1, cost + c, rate + r, avail + a)
        kinds[s] = LinkKind.NONE

    recurse(0, 0.0, 0.0, 0.0)
    return out


@dataclass(eq=False)
class PlanningGraph:
    """M-partite compatibility graph over local assignments.

    One part per station; two assignments of different stations are
    adjacent when they agree on the technology of any pair they share.
    Stations outside each other's candidate sets share no pair, so their
    assignments are always compatible.  Edges are implicit — the graph
    would be quadratically large — and queried via :meth:`adjacent`.
    """

    parts: tuple[tuple[LocalAssignment, ...], ...]
    neighbors: NeighborSets

    @property
    def vertex_count(self) -> int:
        return sum(len(p) for p in self.parts)

    def adjacent(self, u: LocalAssignment, v: LocalAssignment) -> bool:
        if u.owner == v.owner:
            return False
        if v.owner not in self.neighbors.neighbors[u.owner]:
            return True
        return u.choice(v.owner) == v.choice(u.owner)

    def edge_count(self) -> int:
        """Number of compatibility edges, computed without materializing them."""
        m = len(self.parts)
        total = 0
        for i in range(m):
            for k in range(i + 1, m):
                if k in self.neighbors.neighbors[i]:
                    for kind in (LinkKind.NONE, LinkKind.OF, LinkKind.HYBRID):
                        ni = sum(1 for u in self.parts[i] if u.choice(k) == kind)
                        nk = sum(1 for v in self.parts[k] if v.choice(i) == kind)
                        total += ni * nk
                else:
                    total += len(self.parts[i]) * len(self.parts[k])
        return total


def build_planning_graph(ctx: PlanningContext) -> PlanningGraph:
    """Enumerate all stations' local assignments and wrap them as a graph.

    Raises:
        InfeasibleError: if some station admits no feasible local assignment
            (cannot occur when the candidate sets contain the fiber backbone,
            but guarded against for custom contexts).
    """
    parts = []
    for i in range(ctx.topology.num_nodes):
        assignments = enumerate_local_assignments(ctx, i)
        if not assignments:
            raise InfeasibleError(
                f"station {i} admits no feasible local assignment; its candidate "
                f"set {sorted(ctx.neighbors.neighbors[i])} cannot meet the demands"
            )
        parts.append(tuple(assignments))
    return PlanningGraph(parts=tuple(parts), neighbors=ctx.neighbors)


@dataclass(frozen=True)
class CliqueSearchResult:
    """Best consistent selection: one local assignment per station."""

    selected: tuple[LocalAssignment, ...]
    weight: float
    nodes_expanded: int


def max_weight_clique(graph: PlanningGraph) -> CliqueSearchResult:
    """Maximum-weight size-M clique of the compatibility graph.

    Branch and bound: stations are processed in ascending candidate-count
    order; candidate vertices per station are tracked as bitmasks and
    filtered by forward checking as assignments are chosen; a branch is cut
    when the chosen weight plus the sum of per-station maxima ahead cannot
    beat the incumbent.  Weights are never positive, so that bound is sound.
    First-found optima win ties, making the result deterministic.
    """
    parts = graph.parts
    m = len(parts)
    order = sorted(range(m), key=lambda p: (len(parts[p]), p))
    position = {p: d for d, p in enumerate(order)}
    weights = [[a.weight for a in part] for part in parts]
    part_max = [max(w) if w else float("-inf") for w in weights]
    suffix_best = [0.0] * (m + 1)
    for d in range(m - 1, -1, -1):
        suffix_best[d] = suffix_best[d + 1] + part_max[order[d]]

    # choices_toward[p][q][x]: kind vertex x of part p picks for pair (p, q)
    choices_toward: list[dict[int, list[int]]] = [dict() for _ in range(m)]
    # buckets[p][q][kind]: bitmask of part-p vertices picking `kind` for (p, q)
    buckets: list[dict[int, tuple[int, int, int]]] = [dict() for _ in range(m)]
    for p in range(m):
        for q in graph.neighbors.neighbors[p]:
            kinds = [int(a.choice(q)) for a in parts[p]]
            choices_toward[p][q] = kinds
            masks = [0, 0, 0]
            for x, kind in enumerate(kinds):
                masks[kind] |= 1 << x
            buckets[p][q] = (masks[0], masks[1], masks[2])

    avail = [(1 << len(parts[p])) - 1 for p in range(m)]
    chosen = [-1] * m
    best_weight = float("-inf")
    best_chosen: list[int] | None = None
    nodes = 0

    def descend(d: int, weight: float) -> None:
        nonlocal best_weight, best_chosen, nodes
        if d == m:
            if weight > best_weight:
                best_weight = weight
                best_chosen = chosen.copy()
            return
        p = order[d]
        candidates = avail[p]
        while candidates:
            low = candidates & -candidates
            candidates ^= low
            x = low.bit_length() - 1
            w = weights[p][x]
            if weight + w + suffix_best[d + 1] <= best_weight:
                continue
            nodes += 1
            undo: list[tuple[int, int]] = []
            dead = False
            for q in graph.neighbors.neighbors[p]:
                if position[q] < d:
                    continue  # consistency with fixed parts held at their turn
                needed = choices_toward[p][q][x]
                new_mask = avail[q] & buckets[q][p][needed]
                if new_mask != avail[q]:
                    undo.append((q, avail[q]))
                    avail[q] = new_mask
                    if not new_mask:
                        dead = True
                        break
            if not dead:
                chosen[p] = x
                descend(d + 1, weight + w)
                chosen[p] = -1
            for q, old in undo:
                avail[q] = old

    descend(0, 0.0)
    if best_chosen is None:
        raise InfeasibleError("no pairwise-consistent selection of local assignments")
    selected = tuple(parts[p][best_chosen[p]] for p in range(m))
    final_weight = 0.0
    for p in range(m):
        final_weight += selected[p].weight
    return CliqueSearchResult(
        selected=selected, weight=final_weight, nodes_expanded=nodes
    )


@dataclass(frozen=True)
class HybridDiagnostics:
    """Structured report accompanying a heuristic plan."""

    policy: str
    neighbor_sizes: tuple[int, ...]
    assignment_counts: tuple[int, ...]
    graph_vertices: int
    graph_edges: int
    clique_nodes_expanded: int
    clique_weight: float
    weight_cost_rel_gap: float
    links_within_candidates: bool
    assumption_violations: tuple[tuple[int, int], ...]

    def as_dict(self) -> dict:
        return {
            "policy": self.policy,
            "neighbor_sizes": list(self.neighbor_sizes),
            "assignment_counts": list(self.assignment_counts),
            "graph_vertices": self.graph_vertices,
            "graph_edges": self.graph_edges,
            "clique_nodes_expanded": self.clique_nodes_expanded,
            "clique_weight": self.clique_weight,
            "weight_cost_rel_gap": self.weight_cost_rel_gap,
            "links_within_candidates": self.links_within_candidates,
            "assumption_violations": [list(p) for p in self.assumption_violations],
        }


@dataclass(frozen=True)
class HybridResult:
    plan: Plan
    diagnostics: HybridDiagnostics


def plan_hybrid(
    topology: Topology,
    cost_model: CostModel,
    rate_model: RateReliabilityModel,
    *,
    neighbor_policy: str = "eq4",
    neighbor_cap: int = DEFAULT_NEIGHBOR_CAP,
    fiber_plan: Plan | None = None,
) -> HybridResult:
    """Run the full heuristic pipeline and return the plan plus diagnostics.

    The result always satisfies the exact demands (verified post hoc with
    :func:`~.exact_planner.check_feasible`) and never costs more than the
    fiber-only plan, which is itself in the searched space.

    Raises:
        InfeasibleError: if the assembled plan fails verification — a bug
            guard; the pipeline is constructed so this cannot happen.
        NeighborLimitError: when a candidate set exceeds ``neighbor_cap``.
    """
    m = topology.num_nodes
    if m == 1:
        return HybridResult(
            plan=Plan.empty(topology),
            diagnostics=HybridDiagnostics(
                policy=neighbor_policy,
                neighbor_sizes=(0,),
                assignment_counts=(1,),
                graph_vertices=0,
                graph_edges=0,
                clique_nodes_expanded=0,
                clique_weight=0.0,
                weight_cost_rel_gap=0.0,
                links_within_candidates=True,
                assumption_violations=(),
            ),
        )
    ctx = PlanningContext.build(
        topology,
        cost_model,
        rate_model,
        neighbor_policy=neighbor_policy,
        neighbor_cap=neighbor_cap,
        fiber_plan=fiber_plan,
    )
    violations = check_neighbor_assumption(ctx.neighbors, ctx.tables)
    if violations:
        logger.warning(
            "neighbor policy %r excludes %d pair(s) whose hybrid price undercuts "
            "the fiber fallback (first: %s); plan quality may suffer",
            neighbor_policy,
            len(violations),
            violations[0],
        )
    graph = build_planning_graph(ctx)
    result = max_weight_clique(graph)

    links = np.zeros((m, m), dtype=np.int8)
    for assignment in result.selected:
        i = assignment.owner
        for j, kind in zip(assignment.neighbors, assignment.kinds):
            if kind != LinkKind.NONE and i < j:
                # both owners carry the pair; clique edges guarantee agreement
                assert result.selected[j].choice(i) == kind
                links[i, j] = links[j, i] = kind
    plan = Plan(topology=topology, links=links)

    report = check_feasible(topology, plan, rate_model)
    if not report.ok:
        failed = ", ".join(c.constraint for c in report.failures())
        raise InfeasibleError(
            f"assembled plan fails verification ({failed}); "
            f"diagnostics: {report.as_dict()}"
        )

    ns = ctx.neighbors.neighbors
    within = all(j in ns[i] for i, j, _ in plan.link_pairs())
    full_cost = plan_cost(plan, ctx.cost_model, include_predeployed=True)
    gap = abs(-result.weight - full_cost) / max(full_cost, 1.0)
    diagnostics = HybridDiagnostics(
        policy=neighbor_policy,
        neighbor_sizes=tuple(len(s) for s in ns),
        assignment_counts=tuple(len(p) for p in graph.parts),
        graph_vertices=graph.vertex_count,
        graph_edges=graph.edge_count(),
        clique_nodes_expanded=result.nodes_expanded,
        clique_weight=result.weight,
        weight_cost_rel_gap=gap,
        links_within_candidates=within,
        assumption_violations=violations,
    )
    return HybridResult(plan=plan, diagnostics=diagnostics)
