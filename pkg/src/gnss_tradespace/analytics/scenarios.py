"""Robustness of the front across the uncertain-parameter scenarios."""

from __future__ import annotations

import concurrent.futures as cf
import itertools
from dataclasses import dataclass, fields

import numpy as np
import pandas as pd

from ..config import ModelParams, ScenarioGrid, default_model
from ..tradespace import (
    DECISIONS, REGIMES, PopulationEvaluator, Scenario, normalize, orbit_regime, pareto_rank,
)

# scenario field -> ScenarioGrid field
_GRID_FIELDS = {
    "learning": "learning_factor",
    "dry_mass_delta": "dry_mass_delta",
    "eol": "eol_strategy",
    "launch_delta": "launch_delta",
    "t_wait_min": "t_wait_min",
    "ops_rate": "ops_musd_per_sat_yr",
}


def enumerate_scenarios(grid: ScenarioGrid | None = None) -> list[Scenario]:
    """Full factorial over the scenario grid, in field order."""
    g = grid or ScenarioGrid()
    names = [f.name for f in fields(Scenario)]
    lists = [getattr(g, _GRID_FIELDS[n]) for n in names]
    return [Scenario(**dict(zip(names, combo))) for combo in itertools.product(*lists)]


@dataclass(frozen=True)
class SweepResult:
    scenarios: list
    ranks: np.ndarray  # (n_scenarios, n_architectures)
    arch_ids: np.ndarray
    regimes: np.ndarray

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    def nondominated_pct(self) -> np.ndarray:
        return 100.0 * np.mean(self.ranks == 1, axis=0)

    def fuzzy_pct(self, k: int = 2) -> np.ndarray:
        return 100.0 * np.mean(self.ranks <= k, axis=0)

    def regime_shares(self, k: int = 2) -> pd.DataFrame:
        """Per scenario: percentage of the fuzzy front in each orbit regime."""
        rows = []
        for s, r in zip(self.scenarios, self.ranks):
            front = r <= k
            total = front.sum()
            share = {g: 100.0 * np.sum(front & (self.regimes == g)) / total for g in REGIMES}
            rows.append({**{f.name: getattr(s, f.name) for f in fields(Scenario)},
                         "fuzzy_size": int(total), **share})
        return pd.DataFrame(rows)


def _ranks(evaluator: PopulationEvaluator, scenario: Scenario) -> np.ndarray:
    return pareto_rank(normalize(evaluator.objectives(scenario)))


def scenario_sweep(population: pd.DataFrame, gdop=None, scenarios=None, model: ModelParams | None = None,
                   workers: int = 1) -> SweepResult:
    """Rank the fixed population under every scenario.

    GDOP is scenario-invariant and taken from ``population['gdop']`` unless
    given.  Threads share one evaluator; each scenario is independent and the
    result rows are stored by scenario index, so the output does not depend
    on the worker count.
    """
    model = model or default_model()
    scenarios = list(scenarios) if scenarios is not None else enumerate_scenarios()
    g = population["gdop"].to_numpy(float) if gdop is None else np.asarray(gdop, float)
    ev = PopulationEvaluator(population[list(DECISIONS)], g, model)
    for s in scenarios:  # warm the sizing memo in a fixed order
        ev._sizing(s)
    if workers > 1:
        with cf.ThreadPoolExecutor(workers) as pool:
            ranks = list(pool.map(lambda s: _ranks(ev, s), scenarios))
    else:
        ranks = [_ranks(ev, s) for s in scenarios]
    r = np.vstack(ranks) if ranks else np.zeros((0, len(population)), dtype=np.int64)
    return SweepResult(scenarios, r, population["arch_id"].to_numpy() if "arch_id" in population else
                       np.arange(len(population)), orbit_regime(population["altitude_km"].to_numpy()))


def robustness_table(population: pd.DataFrame, sweep: SweepResult) -> pd.DataFrame:
    """Per architecture: % of scenarios where it is non-dominated / in the fuzzy front."""
    out = population[["arch_id", *DECISIONS]].copy() if "arch_id" in population else \
        population[list(DECISIONS)].copy()
    out["regime"] = sweep.regimes
    out["pct_nondominated"] = sweep.nondominated_pct()
    out["pct_fuzzy"] = sweep.fuzzy_pct()
    return out.sort_values(["pct_nondominated", "pct_fuzzy"], ascending=False, kind="stable").reset_index(drop=True)


def one_at_a_time(shares: pd.DataFrame, knob: str, baseline: Scenario | None = None) -> pd.DataFrame:
    """Rows of ``shares`` varying only ``knob``, every other knob at baseline."""
    base = baseline or Scenario()
    mask = np.ones(len(shares), dtype=bool)
    for f in fields(Scenario):
        if f.name != knob:
            mask &= shares[f.name].to_numpy() == getattr(base, f.name)
    return shares[mask].sort_values(knob).reset_index(drop=True)
