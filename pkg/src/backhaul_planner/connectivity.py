"""Connectivity tests for deployment plans.

Two independent routes to the same question: the algebraic one via the
second-smallest Laplacian eigenvalue (positive iff the link graph is
connected) and the combinatorial one via union-find.  Planners use the
union-find route; the eigenvalue is kept for reports and as a cross-check.
"""

from __future__ import annotations

import logging

import numpy as np

from .topology import Plan

logger = logging.getLogger(__name__)

# Treat the Fiedler value as zero below this.  The smallest nonzero value a
# connected plan can take is 2(1 - cos(pi/M)), about 7.9e-3 at M = 50, so
# 1e-6 separates the two cases with orders of magnitude to spare.
FIEDLER_TOL = 1e-6


class DisjointSet:
    """Union-find with union by size and O(1) rollback per union.

    Path compression is deliberately omitted: keeping the forest structure
    untouched by ``find`` is what makes unions reversible, which the exact
    solver's backtracking depends on.
    """

    __slots__ = ("parent", "size", "num_components", "_trail")

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError(f"need at least one element, got {n}")
        self.parent = list(range(n))
        self.size = [1] * n
        self.num_components = n
        self._trail: list[tuple[int, int] | None] = []

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        """Join the components of a and b; False if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            self._trail.append(None)
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.num_components -= 1
        self._trail.append((rb, ra))
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def snapshot(self) -> int:
        """Marker for a later :meth:`rollback`."""
        return len(self._trail)

    def rollback(self, marker: int) -> None:
        """Undo every union performed since ``snapshot`` returned marker."""
        trail = self._trail
        if marker > len(trail):
            raise ValueError("rollback marker is ahead of the union trail")
        while len(trail) > marker:
            entry = trail.pop()
            if entry is not None:
                child, root = entry
                self.parent[child] = child
                self.size[root] -= self.size[child]
                self.num_components += 1

    def copy(self) -> "DisjointSet":
        """Independent copy sharing no state; its trail starts empty."""
        other = DisjointSet.__new__(DisjointSet)
        other.parent = self.parent.copy()
        other.size = self.size.copy()
        other.num_components = self.num_components
        other._trail = []
        return other


def laplacian_matrix(plan: Plan) -> np.ndarray:
    """Graph Laplacian of the plan's link graph (any kind counts as a link)."""
    adj = plan.adjacency().astype(np.float64)
    return np.diag(adj.sum(axis=1)) - adj


def fiedler_value(plan: Plan) -> float:
    """Second-smallest Laplacian eigenvalue; > 0 iff the plan is connected.

    Raises:
        ValueError: for single-station plans, where the value is undefined.
    """
    if plan.num_nodes < 2:
        raise ValueError("the Fiedler value needs at least two stations")
    eigenvalues = np.linalg.eigvalsh(laplacian_matrix(plan))
    return float(eigenvalues[1])


def is_connected(plan: Plan) -> bool:
    """Whether every station pair is joined by some link path.

    Union-find based, so exact: agrees with ``fiedler_value(p) > FIEDLER_TOL``
    by construction of the tolerance.  A single station counts as connected.
    """
    m = plan.num_nodes
    if m == 1:
        return True
    dsu = DisjointSet(m)
    ii, jj = np.nonzero(np.triu(plan.links, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        dsu.union(i, j)
    return dsu.num_components == 1
