import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnss_tradespace.config import build_model, default_model
from gnss_tradespace.cost import (
    NoLaunchCapability, bus_catalog, bus_unit_cost, flight_units, launch_cost_array, launch_plan,
    learning_exponent, production_cost, select_bus, soyuz_performance, total_cost,
)

COST = default_model().cost

# published wet mass -> launch cost: (h, n_sats, n_planes, lifetime, wet kg, launch $M)
LAUNCH_ROWS = [
    (780, 720, 24, 15, 305.5, 4656), (780, 840, 24, 15, 280.6, 4656), (780, 840, 30, 15, 305.5, 5820),
    (1250, 600, 24, 15, 832.8, 11640), (1250, 720, 24, 15, 832.8, 13968), (1250, 720, 30, 15, 747.2, 11640),
    (1250, 720, 30, 15, 832.8, 14550), (1250, 840, 24, 15, 747.2, 13968), (1250, 840, 24, 15, 832.8, 16296),
    (1250, 840, 30, 15, 747.2, 14550), (1250, 840, 30, 15, 832.8, 17460), (12525, 30, 3, 15, 355.4, 582),
    (12525, 30, 5, 15, 355.4, 485), (12525, 48, 4, 15, 355.4, 776), (12525, 48, 3, 15, 355.4, 873),
    (12525, 60, 3, 15, 355.4, 873), (12525, 60, 5, 15, 355.4, 970), (12525, 60, 6, 15, 355.4, 1164),
    (12525, 84, 6, 15, 355.4, 1164), (12525, 84, 6, 15, 552.2, 2328), (20188, 24, 4, 15, 333.9, 388),
    (20188, 84, 6, 15, 816.2, 4074), (23229, 84, 6, 15, 955.3, 4074), (20188, 24, 6, 15, 434.0, 582),
    (23229, 27, 3, 15, 480.8, 873),
]


@pytest.mark.parametrize("mass, name, cost", [
    (410.6, "SSTL 600", 39.90), (788.8, "ELiTe 1000 (O3B)", 49.72), (915.0, "AS-4000", 59.94),
    (200.0, "ELiTe 1000 (Globalstar)", 23.11),
])
def test_select_bus(mass, name, cost):
    b = select_bus(mass)
    assert b.name == name and b.unit_cost_musd == cost and not b.extrapolated


def test_select_bus_extrapolates():
    b = select_bus(4538.0)
    assert b.extrapolated and b.name == "A2100"
    assert b.unit_cost_musd == pytest.approx(2 * 209.47)
    with pytest.raises(ValueError):
        select_bus(0.0)


def test_catalog_sorted():
    caps = [e.max_dry_mass_kg for e in bus_catalog()]
    assert caps == sorted(caps)


def test_cheapest_fitting_bus_wins():
    m = build_model({"cost": {"bus_catalog": [
        {"name": "small", "max_dry_mass_kg": 300, "unit_cost_musd": 30},
        {"name": "big cheap", "max_dry_mass_kg": 900, "unit_cost_musd": 20},
    ]}})
    assert select_bus(250.0, m.cost).name == "big cheap"
    assert bus_unit_cost(np.array([250.0]), m.cost)[0][0] == 20


@given(st.lists(st.floats(1, 6000), min_size=1, max_size=30))
def test_vectorized_bus_matches_scalar(masses):
    cost, over = bus_unit_cost(np.array(masses))
    for m, c, o in zip(masses, cost, over):
        b = select_bus(m)
        assert c == pytest.approx(b.unit_cost_musd, rel=1e-12) and o == b.extrapolated


def test_flight_units():
    assert flight_units(24, 15) == 48
    assert flight_units(840, 15) == 1680
    assert flight_units(24, 30) == 24
    with pytest.raises(ValueError):
        flight_units(24, 7)


def test_production_cost():
    assert production_cost(39.9, 1, 0.85) == 39.9
    assert production_cost(39.9, 48, 1.0) == pytest.approx(39.9 * 48)
    assert production_cost(39.9, 48, 0.85) == pytest.approx(772, abs=1)
    assert learning_exponent(0.85) == pytest.approx(0.7655, abs=1e-4)
    with pytest.raises(ValueError):
        production_cost(39.9, 0, 0.85)
    with pytest.raises(ValueError):
        production_cost(39.9, 10, 1.2)


@given(st.integers(1, 5000), st.floats(0.5, 1.0))
def test_learning_doubling(n, s):
    assert production_cost(10.0, 2 * n, s) / production_cost(10.0, n, s) == pytest.approx(2 ** learning_exponent(s))


def test_production_vectorized():
    out = production_cost(np.array([10.0, 20.0]), np.array([1, 8]), 0.85)
    assert out.shape == (2,) and out[1] == pytest.approx(20 * 8**learning_exponent(0.85))


def test_soyuz_performance():
    assert soyuz_performance(780) == pytest.approx(5110, abs=5)
    assert soyuz_performance(20188) == pytest.approx(2070, abs=5)
    h = np.array(default_model().options.altitude_km, float)
    assert np.all(np.diff(soyuz_performance(h)) < 0)
    with pytest.raises(NoLaunchCapability):
        soyuz_performance(1e6)


@pytest.mark.parametrize("h, n, p, life, wet, cost", LAUNCH_ROWS)
def test_published_launch_costs(h, n, p, life, wet, cost):
    plan = launch_plan(wet, h, p, n // p, 30 // life)
    assert plan.cost_musd == cost and not plan.heavy


def test_launch_examples():
    gps = launch_plan(434.0, 20188, 6, 4, 2)
    assert (gps.sats_per_launch, gps.n_launches) == (4, 12)
    leo = launch_plan(305.5, 780, 24, 30, 2)
    assert (leo.sats_per_launch, leo.n_launches) == (16, 96)
    mid = launch_plan(355.4, 12525, 3, 10, 2)
    assert (mid.sats_per_launch, mid.n_launches) == (7, 12)


def test_heavy_branch_and_boundary():
    perf = soyuz_performance(30967)
    at = launch_plan(perf, 30967, 3, 28, 2)
    assert not at.heavy and at.sats_per_launch == 1
    above = launch_plan(perf + 1.0, 30967, 3, 28, 2)
    assert above.heavy and above.n_launches == 3 * 28 * 2
    assert above.cost_musd == pytest.approx(COST.heavy_musd_per_kg * (perf + 1.0) * 168)


@given(
    st.floats(50, 4000), st.sampled_from(default_model().options.altitude_km),
    st.sampled_from([(3, 10), (6, 14), (24, 30), (4, 6)]), st.sampled_from([2, 3, 6]), st.sampled_from([0, 0.4, 0.8]),
)
def test_launch_vector_matches_scalar_and_integral(wet, h, counts, gens, disc):
    p, s = counts
    plan = launch_plan(wet, h, p, s, gens, disc)
    cost, n = launch_cost_array(np.array([wet]), h, p, s, gens, disc)
    assert cost[0] == pytest.approx(plan.cost_musd, rel=1e-12) and n[0] == plan.n_launches
    if not plan.heavy:
        assert plan.n_launches % (p * gens) == 0
    assert plan.cost_musd == pytest.approx((1 - disc) * launch_plan(wet, h, p, s, gens).cost_musd)


def test_total_cost():
    base = total_cost(772.0, 582.0, 0.0, 24)
    assert base.total_busd == pytest.approx(1.354)
    assert base.operations_musd == 0
    assert total_cost(0.0, 0.0, 2.0, 84).operations_musd == 5040
    with pytest.raises(ValueError):
        total_cost(-1.0, 0.0, 0.0, 24)
    assert math.isclose(total_cost(1.0, 2.0, 0.0, 1).total_busd, 0.003)
