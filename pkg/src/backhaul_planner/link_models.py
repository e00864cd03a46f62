"""Per-link cost, rate, and reliability models.

Fiber cost grows linearly with trench length; a hybrid RF/FSO unit has a
distance-independent hardware price by default (a callable price is accepted
for site-specific studies).  Hybrid link rate and reliability follow a
plateau-then-exponential-decay curve of the link distance: full performance
up to a technology-dependent plateau distance, exponential falloff beyond
it, with the decay length expressed in kilometers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .topology import LinkKind, Plan, Topology

logger = logging.getLogger(__name__)

HybridPrice = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class CostModel:
    """Deployment prices: fiber in $/m, hybrid per link.

    Attributes:
        of_per_meter: trenching price of optical fiber, $ per meter.
        hybrid_price: either a constant $ price per hybrid RF/FSO link or a
            callable mapping link distance in meters to a $ price.
    """

    of_per_meter: float
    hybrid_price: HybridPrice

    def __post_init__(self) -> None:
        if not (math.isfinite(self.of_per_meter) and self.of_per_meter > 0):
            raise ValueError(f"of_per_meter must be positive, got {self.of_per_meter}")
        if not callable(self.hybrid_price):
            p = float(self.hybrid_price)
            if not (math.isfinite(p) and p > 0):
                raise ValueError(f"hybrid_price must be positive, got {p}")


def _check_distance(distance_m: float) -> float:
    d = float(distance_m)
    if not (math.isfinite(d) and d > 0):
        raise ValueError(f"link distance must be positive and finite, got {distance_m}")
    return d


def of_link_cost(model: CostModel, distance_m: float) -> float:
    """Fiber deployment cost in $ for one link of the given length."""
    return model.of_per_meter * _check_distance(distance_m)


def hybrid_link_cost(model: CostModel, distance_m: float) -> float:
    """Hybrid RF/FSO deployment cost in $ for one link of the given length."""
    d = _check_distance(distance_m)
    if callable(model.hybrid_price):
        p = float(model.hybrid_price(d))
        if not (math.isfinite(p) and p > 0):
            raise ValueError(f"hybrid price callable returned {p} at d={d} m")
        return p
    return float(model.hybrid_price)


def link_cost(model: CostModel, kind: LinkKind, distance_m: float) -> float:
    """Deployment cost of one link of the given kind and length."""
    if kind == LinkKind.OF:
        return of_link_cost(model, distance_m)
    if kind == LinkKind.HYBRID:
        return hybrid_link_cost(model, distance_m)
    raise ValueError("an absent link has no deployment cost")


@dataclass(frozen=True)
class RateReliabilityModel:
    """Hybrid-link performance curves and the per-station targets.

    Attributes:
        target_rate: per-station throughput demand in Mbit/s; one fiber link
            always covers it.
        rate_plateau_m: distance up to which a hybrid link delivers the full
            target rate, in meters.
        target_reliability: per-station availability demand, in (0, 1); a
            fiber link is assumed to meet exactly this level.
        reliability_plateau_m: distance up to which a hybrid link holds its
            plateau reliability, in meters.
        decay_km: exponential decay length beyond either plateau, km.
        plateau_reliability: hybrid reliability held on the plateau;
            defaults to ``target_reliability``.
    """

    target_rate: float
    rate_plateau_m: float
    target_reliability: float
    reliability_plateau_m: float
    decay_km: float = 1.0
    plateau_reliability: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.target_rate) and self.target_rate > 0):
            raise ValueError(f"target_rate must be positive, got {self.target_rate}")
        for name in ("rate_plateau_m", "reliability_plateau_m", "decay_km"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if not 0.0 < self.target_reliability < 1.0:
            raise ValueError(
                f"target_reliability must lie in (0, 1), got {self.target_reliability}"
            )
        if self.plateau_reliability is not None:
            if not 0.0 < self.plateau_reliability < 1.0:
                raise ValueError(
                    f"plateau_reliability must lie in (0, 1), "
                    f"got {self.plateau_reliability}"
                )

    @property
    def plateau_reliability_value(self) -> float:
        if self.plateau_reliability is None:
            return self.target_reliability
        return self.plateau_reliability


def hybrid_rate(model: RateReliabilityModel, distance_m: float) -> float:
    """Hybrid-link rate in Mbit/s: plateau then exponential decay.

    Continuous at the plateau edge: the decay factor is exp(0) = 1 there.
    """
    d = _check_distance(distance_m)
    if d < model.rate_plateau_m:
        return model.target_rate
    excess_km = (d - model.rate_plateau_m) / 1000.0
    return model.target_rate * math.exp(-excess_km / model.decay_km)


def hybrid_reliability(model: RateReliabilityModel, distance_m: float) -> float:
    """Hybrid-link availability in (0, 1): plateau then exponential decay."""
    d = _check_distance(distance_m)
    plateau = model.plateau_reliability_value
    if d < model.reliability_plateau_m:
        return plateau
    excess_km = (d - model.reliability_plateau_m) / 1000.0
    return plateau * math.exp(-excess_km / model.decay_km)


@dataclass(frozen=True, eq=False)
class LinkTables:
    """Precomputed per-pair link economics for one topology.

    All four matrices are ``(M, M)`` and symmetric with zero diagonals; the
    diagonal entries are placeholders and must never be read as link values.
    """

    of_cost: np.ndarray
    hybrid_cost: np.ndarray
    rate: np.ndarray
    reliability: np.ndarray

    @classmethod
    def build(
        cls,
        topology: Topology,
        cost_model: CostModel,
        rate_model: RateReliabilityModel,
    ) -> "LinkTables":
        d = topology.distances
        m = topology.num_nodes
        of_cost = cost_model.of_per_meter * d
        if callable(cost_model.hybrid_price):
            hybrid_cost = np.zeros((m, m))
            for i in range(m):
                for j in range(i + 1, m):
                    c = hybrid_link_cost(cost_model, d[i, j])
                    hybrid_cost[i, j] = hybrid_cost[j, i] = c
        else:
            hybrid_cost = np.full((m, m), float(cost_model.hybrid_price))
            np.fill_diagonal(hybrid_cost, 0.0)
        decay_m = 1000.0 * rate_model.decay_km
        rate = np.where(
            d < rate_model.rate_plateau_m,
            rate_model.target_rate,
            rate_model.target_rate * np.exp(-(d - rate_model.rate_plateau_m) / decay_m),
        )
        plateau = rate_model.plateau_reliability_value
        reliability = np.where(
            d < rate_model.reliability_plateau_m,
            plateau,
            plateau * np.exp(-(d - rate_model.reliability_plateau_m) / decay_m),
        )
        np.fill_diagonal(rate, 0.0)
        np.fill_diagonal(reliability, 0.0)
        for arr in (of_cost, hybrid_cost, rate, reliability):
            arr.flags.writeable = False
        return cls(
            of_cost=of_cost, hybrid_cost=hybrid_cost, rate=rate, reliability=reliability
        )


def plan_cost(
    plan: Plan, cost_model: CostModel, *, include_predeployed: bool = False
) -> float:
    """Total deployment cost of a plan in $.

    Pre-deployed fiber is sunk cost and excluded by default; passing
    ``include_predeployed=True`` adds it back, which is only meaningful for
    accounting identities, never for comparing planners.
    """
    d = plan.topology.distances
    pre = plan.topology.predeployed
    total = 0.0
    for i, j, kind in plan.link_pairs():
        if kind == LinkKind.OF:
            if pre[i, j] and not include_predeployed:
                continue
            total += of_link_cost(cost_model, d[i, j])
        else:
            total += hybrid_link_cost(cost_model, d[i, j])
    return total
