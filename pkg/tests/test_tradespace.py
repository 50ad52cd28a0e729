from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnss_tradespace.config import DecisionOptions, default_model
from gnss_tradespace.tradespace import (
    BASELINE, DECISIONS, DecisionVector, PopulationEvaluator, Scenario, apply_constraints, categorical_rejection,
    decisions_frame, enumerate_full_factorial, fuzzy_front, normalize, orbit_regime, pareto_rank,
    pareto_rank_bruteforce, rank_frame,
)

MODEL = default_model()
C = MODEL.constraints


def _dominates(a, b):
    return np.all(a <= b) and np.any(a < b)


objective_sets = st.integers(1, 120).flatmap(
    lambda n: st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=n, max_size=n)
)


# enumeration ------------------------------------------------------------------------

def test_full_factorial_count():
    assert len(enumerate_full_factorial()) == 44226 == 7 * 13 * 3 * 6 * 3 * 3 * 3


def test_single_option_each():
    opts = DecisionOptions(*[(v[0],) for v in (
        MODEL.options.altitude_km, MODEL.options.n_sats, MODEL.options.inclination_deg, MODEL.options.n_planes,
        MODEL.options.rx_power_dbw, MODEL.options.n_freqs, MODEL.options.lifetime_yr)])
    assert enumerate_full_factorial(opts) == [DecisionVector(780, 20, 87, 3, -155, 1, 5)]


def test_enumeration_unique_and_ordered():
    vs = enumerate_full_factorial()
    assert len(set(vs)) == len(vs)
    assert vs == sorted(vs, key=lambda v: tuple(
        getattr(MODEL.options, d).index(getattr(v, d)) for d in DECISIONS))


def test_decisions_frame_columns():
    df = decisions_frame(enumerate_full_factorial()[:5])
    assert list(df.columns) == list(DECISIONS) and len(df) == 5


# constraints -------------------------------------------------------------------------

@pytest.mark.parametrize("v, stage", [
    (DecisionVector(20188, 27, 56, 4, -155, 3, 15), "divisibility"),
    (DecisionVector(780, 20, 87, 4, -155, 3, 15), "regime"),
    (DecisionVector(780, 360, 56, 24, -155, 3, 15), "regime"),
    (DecisionVector(20188, 96, 56, 6, -155, 3, 15), "regime"),
    (DecisionVector(20188, 24, 87, 6, -155, 3, 15), "regime"),
    (DecisionVector(20188, 24, 56, 24, -155, 3, 15), "regime"),
])
def test_categorical_rejections(v, stage):
    assert categorical_rejection(v, C)[0] == stage


def test_categorical_accepts_references():
    assert categorical_rejection(DecisionVector(20188, 24, 56, 6, -155, 3, 15), C) is None
    assert categorical_rejection(DecisionVector(780, 720, 87, 24, -145, 3, 15), C) is None


class _FakeField:
    def __init__(self, coverage, worst):
        self.coverage, self.worst_site = coverage, worst


def test_apply_constraints_stage_accounting():
    vs = [DecisionVector(20188, 24, 56, 6, -155, 3, 15), DecisionVector(20188, 27, 56, 4, -155, 3, 15),
          DecisionVector(12525, 30, 56, 3, -155, 3, 15), DecisionVector(8330, 30, 56, 3, -155, 3, 15),
          DecisionVector(780, 20, 87, 4, -155, 3, 15), DecisionVector(23229, 27, 56, 3, -155, 3, 15)]
    fields = {20188: _FakeField(1.0, 2.6), 12525: _FakeField(0.99, np.inf), 8330: _FakeField(1.0, 7.0),
              23229: _FakeField(1.0, 2.1)}
    costs = {20188: 1.3, 23229: 61.0}
    res = apply_constraints(vs, C, lambda v: fields[v.altitude_km],
                            lambda alive: np.array([costs[v.altitude_km] for v in alive]), 60.0)
    assert res.stage_counts == {"divisibility": 1, "regime": 1, "coverage": 1, "gdop": 1, "cost": 1, "feasible": 1}
    assert res.feasible == [vs[0]]
    assert sum(res.stage_counts.values()) == len(vs)
    assert {r[1] for r in res.rejections} == {"divisibility", "regime", "coverage", "gdop", "cost"}


# regimes ------------------------------------------------------------------------------

def test_orbit_regime():
    assert list(orbit_regime([780, 1250, 8330, 12525, 20188, 23229, 30967])) == [
        "LEO", "LEO", "Low MEO", "Low MEO", "MEO", "MEO", "High MEO"]
    assert orbit_regime(20188) == "MEO"


# scenario ----------------------------------------------------------------------------

def test_scenario_validation():
    assert Scenario.baseline() == BASELINE
    for bad in ({"learning": 0}, {"dry_mass_delta": -1}, {"eol": "x"}, {"launch_delta": -1.5},
                {"t_wait_min": -1}, {"ops_rate": -2}):
        with pytest.raises(ValueError):
            Scenario(**bad)


# normalization and ranking ------------------------------------------------------------

def test_normalize_examples():
    x = normalize(np.array([[1.0, 7.0], [3.0, 7.0], [5.0, 7.0]]))
    assert list(x[:, 0]) == [0.0, 0.5, 1.0]
    assert list(x[:, 1]) == [0.0, 0.0, 0.0]
    assert normalize(np.zeros((0, 2))).shape == (0, 2)


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=50))
def test_normalize_idempotent_and_bounded(rows):
    x = normalize(np.array(rows))
    assert np.all((x >= 0) & (x <= 1))
    assert np.allclose(normalize(x), x, atol=1e-12)


def test_rank_examples():
    assert list(pareto_rank(np.array([[0.3, 0.3]]))) == [1]
    pts = np.array([[0, 1], [1, 0], [1, 1], [2, 2], [0, 1]])
    assert list(pareto_rank(pts)) == [1, 1, 2, 3, 1]
    assert len(pareto_rank(np.zeros((0, 2)))) == 0


@settings(max_examples=200, deadline=None)
@given(objective_sets)
def test_rank_matches_bruteforce(rows):
    x = np.array(rows, float)
    assert np.array_equal(pareto_rank(x), pareto_rank_bruteforce(x))


@settings(max_examples=100, deadline=None)
@given(objective_sets)
def test_rank_layers_are_sound(rows):
    x = np.array(rows, float)
    r = pareto_rank(x)
    for i in range(len(x)):
        # nothing in the same or a later layer dominates i; something in the previous layer does
        assert not any(_dominates(x[j], x[i]) for j in range(len(x)) if r[j] >= r[i])
        if r[i] > 1:
            assert any(_dominates(x[j], x[i]) for j in np.flatnonzero(r == r[i] - 1))


@settings(max_examples=60, deadline=None)
@given(objective_sets.filter(lambda r: len(r) > 1), st.data())
def test_removing_front_member_never_raises_rank(rows, data):
    x = np.array(rows, float)
    r = pareto_rank(x)
    k = data.draw(st.sampled_from(list(np.flatnonzero(r == 1))))
    keep = np.arange(len(x)) != k
    assert np.all(pareto_rank(x[keep]) <= r[keep])


def test_fuzzy_front():
    r = np.array([1, 2, 3, 1, 5])
    assert list(fuzzy_front(r, 1)) == [0, 3]
    assert list(fuzzy_front(r)) == [0, 1, 3]
    assert list(fuzzy_front(r, np.inf)) == [0, 1, 2, 3, 4]


def test_rank_frame_uses_normalized_objectives():
    df = pd.DataFrame({"nav_error_m": [1.0, 2.0, 3.0], "total_cost_busd": [3.0, 2.0, 4.0]})
    assert list(rank_frame(df)["pareto_rank"]) == [1, 1, 2]


# population evaluator ------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_population():
    vs = [DecisionVector(20188, 24, 56, 6, -155, 3, 15), DecisionVector(23229, 27, 56, 3, -155, 3, 15),
          DecisionVector(12525, 84, 64, 6, -155, 3, 15), DecisionVector(780, 720, 87, 24, -145, 3, 15),
          DecisionVector(30967, 84, 64, 6, -150, 2, 5)]
    return decisions_frame(vs), np.array([2.6, 2.1, 1.1, 1.4, 1.3])


def test_evaluator_objectives_match_frame(small_population):
    d, g = small_population
    ev = PopulationEvaluator(d, g)
    for s in (BASELINE, Scenario(learning=0.9, dry_mass_delta=0.2, eol="deorbit", launch_delta=-0.4,
                                 t_wait_min=5, ops_rate=2)):
        frame = ev.evaluate(s)
        assert np.array_equal(ev.objectives(s), frame[["nav_error_m", "total_cost_busd"]].to_numpy())
        assert np.allclose(frame["nav_error_m"], frame["uere_m"] * frame["gdop"])
        total = (frame["production_musd"] + frame["launch_musd"] if "launch_musd" in frame else
                 frame["production_musd"] + frame["launch_cost_musd"]) + frame["operations_musd"]
        assert np.allclose(frame["total_cost_busd"], total / 1000)


def test_evaluator_order_independent(small_population):
    d, g = small_population
    a = PopulationEvaluator(d, g).evaluate()
    perm = [3, 0, 4, 2, 1]
    b = PopulationEvaluator(d.iloc[perm], g[perm]).evaluate()
    pd.testing.assert_frame_equal(a.iloc[perm].reset_index(drop=True), b)


def test_evaluator_scenario_knobs(small_population):
    d, g = small_population
    ev = PopulationEvaluator(d, g)
    base = ev.evaluate()
    ops = ev.evaluate(Scenario(ops_rate=2))
    assert np.allclose(ops["operations_musd"], 2 * d["n_sats"] * 30)
    cheap = ev.evaluate(Scenario(launch_delta=-0.8))
    assert np.allclose(cheap["launch_cost_musd"], 0.2 * base["launch_cost_musd"])
    heavy = ev.evaluate(Scenario(dry_mass_delta=0.4))
    assert np.all(heavy["dry_mass_kg"] > base["dry_mass_kg"])
    wait = ev.evaluate(Scenario(t_wait_min=30))
    assert np.all(wait["uere_m"] <= base["uere_m"])


def test_evaluator_rejects_bad_horizon(small_population):
    d, g = small_population
    m = replace(MODEL, cost=replace(MODEL.cost, horizon_yr=25))
    with pytest.raises(ValueError):
        PopulationEvaluator(d, g, m)
