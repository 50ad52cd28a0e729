"""First- and total-order Sobol indices by conditional-mean grouping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..tradespace import DECISIONS


@dataclass(frozen=True)
class SensitivityReport:
    """``indices[metric][decision] = (first_order, total_order)``."""

    indices: dict
    n: int

    def first(self, metric: str, decision: str) -> float:
        return self.indices[metric][decision][0]

    def total(self, metric: str, decision: str) -> float:
        return self.indices[metric][decision][1]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "indices": {m: {d: {"first": f, "total": t} for d, (f, t) in per.items()}
                        for m, per in self.indices.items()},
        }


def _between_variance(y: np.ndarray, codes: np.ndarray) -> float:
    """Variance of group means, weighted by group size (population form).

    Groups whose values are all identical, and a set of identical group
    means, contribute exactly zero.
    """
    counts = np.bincount(codes)
    sums = np.bincount(codes, weights=y)
    means = sums / counts
    lo = np.full(len(counts), np.inf)
    hi = np.full(len(counts), -np.inf)
    np.minimum.at(lo, codes, y)
    np.maximum.at(hi, codes, y)
    const = lo == hi
    means[const] = lo[const]
    if np.ptp(means) == 0:
        return 0.0
    grand = np.sum(counts * means) / counts.sum()
    return float(np.sum(counts * (means - grand) ** 2) / counts.sum())


def _codes(frame: pd.DataFrame, cols) -> np.ndarray:
    if len(cols) == 1:
        return pd.factorize(frame[cols[0]], sort=True)[0]
    return frame.groupby(list(cols), sort=True).ngroup().to_numpy()


def sobol_indices(population: pd.DataFrame, decision: str, metric: str,
                  decisions=DECISIONS) -> tuple[float, float]:
    """Empirical first- and total-order index of ``decision`` for ``metric``.

    First order: variance of E[Y | X_i] over the realized values of X_i.
    Total order: 1 - Var(E[Y | X_~i]) / Var(Y), grouping on the joint key of
    all other decisions (singleton groups carry no conditional variance).
    """
    y = population[metric].to_numpy(float)
    if population[decision].nunique() < 2:
        raise ValueError(f"{decision} takes a single value in this population")
    if np.ptp(y) == 0:
        raise ValueError(f"{metric} has zero variance")
    v = float(np.var(y))
    first = _between_variance(y, _codes(population, [decision])) / v
    others = [d for d in decisions if d != decision]
    total = 1.0 - _between_variance(y, _codes(population, others)) / v
    if abs(total) < 1e-12:
        total = 0.0
    return first, total


def sensitivity_report(population: pd.DataFrame, metrics=("nav_error_m", "total_cost_busd"),
                       decisions=DECISIONS) -> SensitivityReport:
    out = {}
    for m in metrics:
        out[m] = {d: sobol_indices(population, d, m, decisions) for d in decisions
                  if population[d].nunique() >= 2}
    return SensitivityReport(out, len(population))
