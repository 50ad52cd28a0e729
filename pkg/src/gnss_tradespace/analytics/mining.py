"""Apriori-style driving-feature mining against a target subset."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..tradespace import DECISIONS, orbit_regime

REGIME = "regime"
# conjunctions that only restate one decision are not mined
_REDUNDANT = {frozenset({REGIME, "altitude_km"})}


@dataclass(frozen=True)
class Feature:
    """Conjunction of ``(decision, value)`` literals."""

    literals: tuple[tuple[str, object], ...]

    def __post_init__(self):
        names = [k for k, _ in self.literals]
        if not 1 <= len(names) <= 2:
            raise ValueError("features have order 1 or 2")
        if len(set(names)) != len(names):
            raise ValueError("a decision may appear only once in a feature")

    @property
    def order(self) -> int:
        return len(self.literals)

    def mask(self, table: pd.DataFrame) -> np.ndarray:
        m = np.ones(len(table), dtype=bool)
        for k, v in self.literals:
            m &= table[k].to_numpy() == v
        return m

    def label(self) -> str:
        return " & ".join(str(v) if k == REGIME else f"{k}={v}" for k, v in self.literals)


@dataclass(frozen=True)
class Rule:
    antecedent: Feature
    consequent: str
    support: float
    support_x: float
    support_y: float
    confidence_xy: float
    confidence_yx: float
    lift: float

    def as_dict(self) -> dict:
        return {
            "feature": self.antecedent.label(),
            "literals": [[k, _plain(v)] for k, v in self.antecedent.literals],
            "order": self.antecedent.order,
            "target": self.consequent,
            "supp_x": self.support_x,
            "supp_xy": self.support,
            "conf_xy": self.confidence_xy,
            "conf_yx": self.confidence_yx,
            "lift": self.lift,
        }


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def feature_table(population: pd.DataFrame) -> pd.DataFrame:
    """Decision columns plus the derived orbit-regime label."""
    t = population[list(DECISIONS)].copy()
    t[REGIME] = orbit_regime(t["altitude_km"].to_numpy())
    return t


def score(feature: Feature, table: pd.DataFrame, target: np.ndarray, name: str = "target") -> Rule:
    """Support, both confidences and lift of ``feature -> target``."""
    n = len(table)
    x = feature.mask(table)
    y = np.asarray(target, bool)
    supp_x = x.sum() / n
    supp_y = y.sum() / n
    supp_xy = (x & y).sum() / n
    conf_xy = supp_xy / supp_x if supp_x > 0 else 0.0
    conf_yx = supp_xy / supp_y if supp_y > 0 else 0.0
    lift = conf_xy / supp_y if supp_y > 0 else 0.0
    return Rule(feature, name, float(supp_xy), float(supp_x), float(supp_y), float(conf_xy),
                float(conf_yx), float(lift))


def mine_rules(
    population: pd.DataFrame,
    target,
    min_conf: float = 0.9,
    min_lift: float = 1.0,
    max_order: int = 2,
    name: str = "target",
) -> list[Rule]:
    """Features that characterize the target subset.

    A rule survives when ``conf(target -> feature) >= min_conf`` and
    ``lift >= min_lift``.  Order-2 candidates are built only from surviving
    order-1 features (the target-side confidence is anti-monotone, so this
    pruning is lossless).  Rules are sorted by order, then by decreasing
    target-side confidence and lift.
    """
    table = population if REGIME in population.columns else feature_table(population)
    y = np.asarray(target, bool)
    if y.shape != (len(table),):
        raise ValueError("target mask must match the population length")
    if not y.any():
        raise ValueError("target set is empty")
    cols = [c for c in (*DECISIONS, REGIME) if c in table.columns]

    def keep(r: Rule) -> bool:
        return r.support > 0 and r.confidence_yx >= min_conf and r.lift >= min_lift

    level1 = []
    for c in cols:
        for v in sorted(pd.unique(table[c]), key=str):
            r = score(Feature(((c, _plain(v)),)), table, y, name)
            if keep(r):
                level1.append(r)
    rules = list(level1)
    if max_order >= 2:
        for a, b in itertools.combinations(level1, 2):
            (ka, va), (kb, vb) = a.antecedent.literals[0], b.antecedent.literals[0]
            if ka == kb or frozenset({ka, kb}) in _REDUNDANT:
                continue
            r = score(Feature(((ka, va), (kb, vb))), table, y, name)
            if keep(r):
                rules.append(r)
    return sorted(rules, key=lambda r: (r.antecedent.order, -r.confidence_yx, -r.lift, r.antecedent.label()))


def table_xiv_targets(population: pd.DataFrame, high_power_dbw: float = -145,
                      affordable_busd: float = 6.0) -> dict[str, tuple[pd.DataFrame, np.ndarray]]:
    """The three mining blocks: whole front, high-power subset, affordable subset.

    Each target is the global rank-1 set restricted to the subpopulation.
    """
    front = population["pareto_rank"].to_numpy() == 1
    hp = population["rx_power_dbw"].to_numpy() == high_power_dbw
    cheap = population["total_cost_busd"].to_numpy() <= affordable_busd
    return {
        "All": (population, front),
        "High-Power": (population[hp], front[hp]),
        "Affordable": (population[cheap], front[cheap]),
    }
