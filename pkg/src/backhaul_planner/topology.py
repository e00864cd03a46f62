"""Base-station topologies and backhaul deployment plans.

A :class:`Topology` fixes the planar positions of the base stations and the
set of already-trenched optical-fiber links that every candidate plan must
keep.  A :class:`Plan` assigns one :class:`LinkKind` to every unordered pair
of stations; validity (symmetry, no self-links, pre-deployed fiber kept) is
enforced at construction time so that planners can rely on it downstream.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

logger = logging.getLogger(__name__)


class LinkKind(enum.IntEnum):
    """Technology deployed on one station pair.

    A pair carries at most one technology — trenching fiber makes a parallel
    RF/FSO unit redundant — so "both" is unrepresentable by design.
    """

    NONE = 0
    OF = 1
    HYBRID = 2

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "LinkKind":
        try:
            return _KIND_FROM_LABEL[label.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown link kind {label!r}") from None


_KIND_LABELS = {LinkKind.NONE: "none", LinkKind.OF: "of", LinkKind.HYBRID: "hybrid"}
_KIND_FROM_LABEL = {v: k for k, v in _KIND_LABELS.items()}


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable deployment site: station coordinates plus forced fiber.

    Attributes:
        nodes: ``(M, 2)`` float64 array of planar coordinates in meters.
        predeployed: ``(M, M)`` boolean matrix of already-trenched fiber
            links; symmetric with a zero diagonal.
    """

    nodes: np.ndarray
    predeployed: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError(f"nodes must be an (M, 2) array, got shape {nodes.shape}")
        if nodes.shape[0] < 1:
            raise ValueError("a topology needs at least one station")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("station coordinates must be finite")
        dup = _first_duplicate_row(nodes)
        if dup is not None:
            raise ValueError(
                f"stations {dup[0]} and {dup[1]} share the same coordinates; "
                "co-located stations would create zero-length links"
            )
        pre = np.asarray(self.predeployed, dtype=bool)
        m = nodes.shape[0]
        if pre.shape != (m, m):
            raise ValueError(f"predeployed must be ({m}, {m}), got shape {pre.shape}")
        if pre.diagonal().any():
            raise ValueError("a station cannot be pre-linked to itself")
        if not np.array_equal(pre, pre.T):
            raise ValueError("predeployed link matrix must be symmetric")
        nodes.flags.writeable = False
        pre.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "predeployed", pre)

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def distances(self) -> np.ndarray:
        """Pairwise Euclidean distance matrix in meters (read-only)."""
        diff = self.nodes[:, None, :] - self.nodes[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        d.flags.writeable = False
        return d

    def distance(self, i: int, j: int) -> float:
        """Euclidean distance in meters between two distinct stations."""
        m = self.num_nodes
        if not (0 <= i < m and 0 <= j < m):
            raise IndexError(f"station index out of range: ({i}, {j}) with M={m}")
        if i == j:
            raise ValueError(f"no link from station {i} to itself")
        return float(self.distances[i, j])

    def predeployed_pairs(self) -> list[tuple[int, int]]:
        """Pre-deployed fiber links as sorted ``(i, j)`` pairs with i < j."""
        ii, jj = np.nonzero(np.triu(self.predeployed, k=1))
        return list(zip(ii.tolist(), jj.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(
            self.predeployed, other.predeployed
        )


def _first_duplicate_row(nodes: np.ndarray) -> tuple[int, int] | None:
    seen: dict[tuple[float, float], int] = {}
    for idx, (x, y) in enumerate(nodes.tolist()):
        key = (x, y)
        if key in seen:
            return seen[key], idx
        seen[key] = idx
    return None


def build_topology(
    coords: Iterable[tuple[float, float]],
    predeployed_pairs: Iterable[tuple[int, int]] = (),
) -> Topology:
    """Assemble a :class:`Topology` from coordinates and forced fiber pairs.

    Args:
        coords: iterable of ``(x, y)`` positions in meters.
        predeployed_pairs: iterable of ``(i, j)`` station index pairs; order
            within a pair is irrelevant and duplicates are tolerated.

    Raises:
        ValueError: on out-of-range indices, self-pairs, co-located
            stations, or malformed coordinates.
    """
    nodes = np.asarray(list(coords), dtype=np.float64)
    if nodes.ndim != 2 or (nodes.size and nodes.shape[1] != 2):
        raise ValueError("coords must be a sequence of (x, y) pairs")
    m = nodes.shape[0]
    pre = np.zeros((m, m), dtype=bool)
    for i, j in predeployed_pairs:
        if not (0 <= i < m and 0 <= j < m):
            raise ValueError(f"pre-deployed pair ({i}, {j}) out of range for M={m}")
        if i == j:
            raise ValueError(f"pre-deployed pair ({i}, {j}) links a station to itself")
        pre[i, j] = pre[j, i] = True
    return Topology(nodes=nodes, predeployed=pre)


def validate_links(links: np.ndarray, topology: Topology) -> None:
    """Check a raw link-kind matrix against the plan validity rules.

    Rules: shape ``(M, M)`` with entries in {NONE, OF, HYBRID}, zero
    diagonal, symmetric, and every pre-deployed pair kept as OF.

    Raises:
        ValueError: naming the first violated rule.
    """
    m = topology.num_nodes
    if links.shape != (m, m):
        raise ValueError(f"link matrix must be ({m}, {m}), got shape {links.shape}")
    if not np.isin(links, (0, 1, 2)).all():
        bad = links[~np.isin(links, (0, 1, 2))].flat[0]
        raise ValueError(f"link matrix contains invalid kind value {bad!r}")
    if links.diagonal().any():
        i = int(np.nonzero(links.diagonal())[0][0])
        raise ValueError(f"station {i} links to itself")
    if not np.array_equal(links, links.T):
        ii, jj = np.nonzero(links != links.T)
        raise ValueError(
            f"link matrix is asymmetric at pair ({int(ii[0])}, {int(jj[0])})"
        )
    missing = topology.predeployed & (links != LinkKind.OF)
    if missing.any():
        ii, jj = np.nonzero(missing)
        raise ValueError(
            f"pre-deployed fiber link ({int(ii[0])}, {int(jj[0])}) is not kept as OF"
        )


@dataclass(frozen=True, eq=False)
class Plan:
    """One link-kind decision per station pair of a topology.

    Construction validates the matrix (see :func:`validate_links`), so any
    held ``Plan`` instance is structurally sound: symmetric, self-link free,
    and a superset of the pre-deployed fiber.
    """

    topology: Topology
    links: np.ndarray

    def __post_init__(self) -> None:
        raw = np.asarray(self.links)
        validate_links(raw, self.topology)
        links = raw.astype(np.int8)
        links.flags.writeable = False
        object.__setattr__(self, "links", links)

    @property
    def num_nodes(self) -> int:
        return self.topology.num_nodes

    def kind(self, i: int, j: int) -> LinkKind:
        if i == j:
            raise ValueError(f"no link from station {i} to itself")
        return LinkKind(int(self.links[i, j]))

    def link_pairs(self) -> Iterator[tuple[int, int, LinkKind]]:
        """Deployed links as ``(i, j, kind)`` with i < j, in index order."""
        m = self.num_nodes
        for i in range(m):
            for j in range(i + 1, m):
                v = int(self.links[i, j])
                if v:
                    yield i, j, LinkKind(v)

    def adjacency(self) -> np.ndarray:
        """Boolean matrix marking pairs joined by any link kind."""
        return self.links != LinkKind.NONE

    def of_matrix(self) -> np.ndarray:
        return self.links == LinkKind.OF

    def hybrid_matrix(self) -> np.ndarray:
        return self.links == LinkKind.HYBRID

    def count(self, kind: LinkKind) -> int:
        """Number of unordered pairs assigned the given kind."""
        return int(np.count_nonzero(np.triu(self.links, k=1) == kind))

    @property
    def num_links(self) -> int:
        return int(np.count_nonzero(np.triu(self.links, k=1)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Plan):
            return NotImplemented
        return self.topology == other.topology and np.array_equal(
            self.links, other.links
        )

    @classmethod
    def empty(cls, topology: Topology) -> "Plan":
        """Plan deploying nothing beyond the pre-deployed fiber."""
        m = topology.num_nodes
        links = np.zeros((m, m), dtype=np.int8)
        links[topology.predeployed] = LinkKind.OF
        return cls(topology=topology, links=links)


def topology_to_dict(t: Topology) -> dict:
    return {
        "nodes": [[float(x), float(y)] for x, y in t.nodes.tolist()],
        "predeployed": [[i, j] for i, j in t.predeployed_pairs()],
    }


def topology_from_dict(payload: dict) -> Topology:
    try:
        nodes = payload["nodes"]
        pre = payload.get("predeployed", [])
    except (TypeError, KeyError) as exc:
        raise ValueError(f"malformed topology payload: {exc}") from exc
    return build_topology(
        [(float(x), float(y)) for x, y in nodes],
        [(int(i), int(j)) for i, j in pre],
    )


def save_topology(t: Topology, path: str | Path) -> None:
    Path(path).write_text(json.dumps(topology_to_dict(t), indent=2) + "\n")


def load_topology(path: str | Path) -> Topology:
    """Read a topology back from JSON; exact float round-trip."""
    return topology_from_dict(json.loads(Path(path).read_text()))


def plan_to_dict(plan: Plan, *, total_cost: float | None = None) -> dict:
    """Serializable plan export: ``{i, j, kind}`` triples plus total cost."""
    payload: dict = {
        "links": [
            {"i": i, "j": j, "kind": kind.label} for i, j, kind in plan.link_pairs()
        ]
    }
    if total_cost is not None:
        payload["total_cost_usd"] = float(total_cost)
    return payload


def plan_from_dict(topology: Topology, payload: dict) -> Plan:
    m = topology.num_nodes
    links = np.zeros((m, m), dtype=np.int8)
    for entry in payload["links"]:
        i, j = int(entry["i"]), int(entry["j"])
        kind = LinkKind.from_label(entry["kind"])
        links[i, j] = links[j, i] = kind
    return Plan(topology=topology, links=links)
