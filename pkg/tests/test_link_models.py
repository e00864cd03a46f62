"""Cost, rate, and reliability link models."""

from __future__ import annotations

import math

import numpy as np
import pytest

from backhaul_planner import (
    CostModel,
    LinkKind,
    LinkTables,
    RateReliabilityModel,
    build_topology,
    hybrid_link_cost,
    hybrid_rate,
    hybrid_reliability,
    link_cost,
    of_link_cost,
    plan_cost,
)
from conftest import (
    default_cost_model,
    default_rate_model,
    plan_with_links,
    random_topology,
)


def test_fiber_cost_is_price_times_length():
    model = default_cost_model()
    assert of_link_cost(model, 1000.0) == pytest.approx(13_500.0)
    assert link_cost(model, LinkKind.OF, 2000.0) == pytest.approx(27_000.0)


def test_hybrid_cost_is_distance_independent():
    model = default_cost_model(hybrid_price=20_000.0)
    assert hybrid_link_cost(model, 100.0) == 20_000.0
    assert hybrid_link_cost(model, 9_999.0) == 20_000.0


def test_hybrid_price_may_depend_on_distance():
    model = CostModel(of_per_meter=13.5, hybrid_price=lambda d: 5.0 * d)
    assert hybrid_link_cost(model, 100.0) == pytest.approx(500.0)


def test_link_cost_rejects_none_kind_and_bad_distance():
    model = default_cost_model()
    with pytest.raises(ValueError):
        link_cost(model, LinkKind.NONE, 100.0)
    with pytest.raises(ValueError):
        of_link_cost(model, 0.0)
    with pytest.raises(ValueError):
        hybrid_link_cost(model, -5.0)


def test_rate_plateau_and_boundary():
    model = default_rate_model()
    assert hybrid_rate(model, 100.0) == 100.0
    assert hybrid_rate(model, 3000.0) == 100.0  # plateau includes its edge
    assert hybrid_rate(model, 4000.0) == pytest.approx(100.0 * math.exp(-1.0))


def test_reliability_plateau_and_boundary():
    model = default_rate_model()
    assert hybrid_reliability(model, 1999.0) == 0.9
    assert hybrid_reliability(model, 2000.0) == 0.9
    assert hybrid_reliability(model, 3000.0) == pytest.approx(0.9 * math.exp(-1.0))


def test_rate_and_reliability_never_increase_with_distance():
    model = default_rate_model()
    rng = np.random.default_rng(3)
    for _ in range(200):
        d1, d2 = sorted(rng.uniform(1.0, 10_000.0, size=2).tolist())
        assert hybrid_rate(model, d1) >= hybrid_rate(model, d2)
        assert hybrid_reliability(model, d1) >= hybrid_reliability(model, d2)


def test_plateau_reliability_override():
    model = default_rate_model(alpha=0.5, plateau_reliability=0.99)
    assert hybrid_reliability(model, 500.0) == 0.99
    assert hybrid_reliability(model, 3000.0) == pytest.approx(0.99 * math.exp(-1.0))


def test_link_tables_match_scalar_models():
    rng = np.random.default_rng(5)
    topo = random_topology(rng, 7)
    cost_model = default_cost_model()
    rate_model = default_rate_model()
    tables = LinkTables.build(topo, cost_model, rate_model)
    for i in range(7):
        for j in range(7):
            if i == j:
                assert tables.of_cost[i, j] == 0.0
                continue
            d = topo.distance(i, j)
            assert tables.of_cost[i, j] == pytest.approx(of_link_cost(cost_model, d))
            assert tables.hybrid_cost[i, j] == pytest.approx(
                hybrid_link_cost(cost_model, d)
            )
            assert tables.rate[i, j] == pytest.approx(hybrid_rate(rate_model, d))
            assert tables.reliability[i, j] == pytest.approx(
                hybrid_reliability(rate_model, d)
            )


def test_plan_cost_counts_new_links_only_by_default():
    topo = build_topology([(0.0, 0.0), (1000.0, 0.0), (2000.0, 0.0)], [(0, 1)])
    plan = plan_with_links(topo, [(1, 2, LinkKind.HYBRID)])
    model = default_cost_model()
    assert plan_cost(plan, model) == pytest.approx(10_000.0)
    assert plan_cost(plan, model, include_predeployed=True) == pytest.approx(23_500.0)


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(of_per_meter=0.0, hybrid_price=1.0)
    with pytest.raises(ValueError):
        CostModel(of_per_meter=1.0, hybrid_price=-3.0)
    with pytest.raises(ValueError):
        RateReliabilityModel(
            target_rate=100.0,
            rate_plateau_m=3000.0,
            target_reliability=1.5,
            reliability_plateau_m=2000.0,
        )
