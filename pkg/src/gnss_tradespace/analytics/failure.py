"""Single-satellite failure impact on worst-site GDOP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..config import ModelParams, default_model
from ..geometry import FailureStats, UserGrid, build_grid, failure_gdop_delta
from ..orbits import OrbitShell, WalkerDelta


@dataclass(frozen=True)
class FailureReport:
    label: str
    walker: WalkerDelta
    stats: FailureStats

    def summary(self) -> dict:
        s = self.stats
        return {
            "label": self.label,
            "altitude_km": self.walker.shell.altitude_km,
            "n_sats": self.walker.n_sats,
            "inclination_deg": self.walker.shell.inclination_deg,
            "n_planes": self.walker.n_planes,
            "intact_worst": s.intact.worst_site,
            "max_delta": s.max_delta,
            "mean_delta": s.mean_delta,
            "spread": s.spread,
            "n_broken": s.n_broken,
            "removed": [list(map(int, r)) for r in s.removed],
        }

    def latitude_profiles(self) -> pd.DataFrame:
        """Intact and per-trial worst GDOP in each latitude band."""
        lats = sorted(self.stats.intact.per_latitude_worst)
        data = {"lat_deg": lats, "intact": [self.stats.intact.per_latitude_worst[b] for b in lats]}
        for i, f in enumerate(self.stats.failed_fields):
            data[f"trial_{i}"] = [f.per_latitude_worst.get(b, np.nan) for b in lats]
        return pd.DataFrame(data)


def representative_constellations() -> dict[str, WalkerDelta]:
    """A small and a large MEO Walker constellation plus the two references."""
    return {
        "GPS 24/6 @20188": WalkerDelta(OrbitShell(20188, 56), 24, 6, 1),
        "GAL 27/3 @23229": WalkerDelta(OrbitShell(23229, 56), 27, 3, 1),
        "84/6 @12525": WalkerDelta(OrbitShell(12525, 64), 84, 6, 1),
        "24/4 @20188": WalkerDelta(OrbitShell(20188, 56), 24, 4, 1),
    }


def failure_study(constellations: dict[str, WalkerDelta] | None = None, n_trials: int = 10, seed: int = 0,
                  grid: UserGrid | None = None, model: ModelParams | None = None) -> list[FailureReport]:
    """Random single failures for each constellation (seeded per constellation)."""
    model = model or default_model()
    grid = grid or build_grid(model.geometry.grid_points)
    cons = constellations or representative_constellations()
    out = []
    for i, (label, cfg) in enumerate(cons.items()):
        stats = failure_gdop_delta(cfg, n_trials, seed + i, grid, 1, model.geometry, model.orbit)
        out.append(FailureReport(label, cfg, stats))
    return out
