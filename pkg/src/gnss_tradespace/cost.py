"""Thirty-year space-segment cost: production with learning, launch, operations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CostParams, default_model


class NoLaunchCapability(ValueError):
    """The launcher regression predicts no payload capacity at this altitude."""


def _cost(params: CostParams | None) -> CostParams:
    return params if params is not None else default_model().cost


@dataclass(frozen=True)
class BusCatalogEntry:
    name: str
    max_dry_mass_kg: float
    unit_cost_musd: float
    extrapolated: bool = False


@dataclass(frozen=True)
class LaunchPlan:
    n_launches: int
    cost_musd: float
    sats_per_launch: int
    heavy: bool


@dataclass(frozen=True)
class CostBreakdown:
    production_musd: float
    launch_musd: float
    operations_musd: float
    n_flight_units: int
    n_launches: int
    bus_name: str

    @property
    def total_busd(self) -> float:
        return (self.production_musd + self.launch_musd + self.operations_musd) / 1000.0


def bus_catalog(params: CostParams | None = None) -> tuple[BusCatalogEntry, ...]:
    """Catalog entries sorted by mass capacity."""
    p = _cost(params)
    entries = [BusCatalogEntry(str(e["name"]), float(e["max_dry_mass_kg"]), float(e["unit_cost_musd"]))
               for e in p.bus_catalog]
    if not entries:
        raise ValueError("bus catalog is empty")
    return tuple(sorted(entries, key=lambda e: (e.max_dry_mass_kg, e.unit_cost_musd)))


def select_bus(m_dry_kg: float, params: CostParams | None = None) -> BusCatalogEntry:
    """Cheapest platform that can carry ``m_dry_kg``.

    Above the largest entry the cost is scaled linearly with mass from that
    entry and the result is flagged as extrapolated.
    """
    if m_dry_kg <= 0:
        raise ValueError("dry mass must be positive")
    catalog = bus_catalog(params)
    fits = [e for e in catalog if e.max_dry_mass_kg >= m_dry_kg]
    if fits:
        return min(fits, key=lambda e: (e.unit_cost_musd, e.max_dry_mass_kg))
    top = catalog[-1]
    return BusCatalogEntry(top.name, m_dry_kg, top.unit_cost_musd * m_dry_kg / top.max_dry_mass_kg, True)


def bus_unit_cost(m_dry_kg, params: CostParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`select_bus`: (unit cost [$M], extrapolated flag)."""
    catalog = bus_catalog(params)
    caps = np.array([e.max_dry_mass_kg for e in catalog])
    costs = np.array([e.unit_cost_musd for e in catalog])
    # cheapest option among all entries at or above each capacity
    cheapest_from = np.minimum.accumulate(costs[::-1])[::-1]
    m = np.asarray(m_dry_kg, float)
    idx = np.searchsorted(caps, m, side="left")
    over = idx >= len(caps)
    out = np.where(over, costs[-1] * m / caps[-1], cheapest_from[np.minimum(idx, len(caps) - 1)])
    return out, over


def flight_units(n_sats: int, lifetime_yr: int, params: CostParams | None = None) -> int:
    """Satellites built over the horizon (replenishment generations included)."""
    p = _cost(params)
    gens = p.horizon_yr / lifetime_yr
    if gens != int(gens):
        raise ValueError(f"horizon {p.horizon_yr} yr is not a multiple of lifetime {lifetime_yr} yr")
    return int(n_sats * int(gens))


def learning_exponent(learning: float) -> float:
    return 1.0 + math.log(learning) / math.log(2.0)


def production_cost(c_bus_musd, n_units, learning: float):
    """Production cost [$M] with a unit learning curve."""
    if not 0 < learning <= 1:
        raise ValueError("learning factor must be in (0, 1]")
    if np.any(np.asarray(n_units) < 1):
        raise ValueError("need at least one flight unit")
    out = c_bus_musd * np.power(np.asarray(n_units, float), learning_exponent(learning))
    return float(out) if np.ndim(out) == 0 else out


def soyuz_performance(h, params: CostParams | None = None):
    """Medium-launcher payload capacity [kg] to a circular orbit at ``h`` [km]."""
    p = _cost(params)
    perf = p.soyuz_ln_coeff * np.log(np.asarray(h, float)) + p.soyuz_intercept
    if np.any(perf <= 0):
        raise NoLaunchCapability(f"no launcher capability at altitude {h} km")
    return float(perf) if np.ndim(perf) == 0 else perf


def launch_plan(m_wet_kg: float, h: float, n_planes: int, sats_per_plane: int, n_generations: int,
                launch_discount: float = 0.0, params: CostParams | None = None) -> LaunchPlan:
    """Launches needed over the horizon, one orbital plane per vehicle.

    Satellites heavier than the medium launcher's capacity are costed per kg.
    """
    if m_wet_kg <= 0:
        raise ValueError("wet mass must be positive")
    p = _cost(params)
    perf = soyuz_performance(h, p)
    per_lv = int(math.floor(perf / m_wet_kg)) if m_wet_kg <= perf else 0
    factor = 1.0 - launch_discount
    if per_lv >= 1:
        n = math.ceil(sats_per_plane / per_lv) * n_planes * n_generations
        return LaunchPlan(n, p.soyuz_launch_musd * n * factor, per_lv, False)
    units = n_planes * sats_per_plane * n_generations
    return LaunchPlan(units, p.heavy_musd_per_kg * m_wet_kg * units * factor, 0, True)


def launch_cost_array(m_wet_kg, h, n_planes, sats_per_plane, n_generations, launch_discount=0.0,
                      params: CostParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`launch_plan`: (cost [$M], number of launches)."""
    p = _cost(params)
    m = np.asarray(m_wet_kg, float)
    perf = soyuz_performance(h, p)
    per_lv = np.where(m <= perf, np.floor(perf / m), 0.0)
    soyuz = per_lv >= 1
    units = np.asarray(n_planes) * np.asarray(sats_per_plane) * np.asarray(n_generations)
    n_soyuz = np.ceil(np.asarray(sats_per_plane) / np.where(soyuz, per_lv, 1.0)) * n_planes * n_generations
    n = np.where(soyuz, n_soyuz, units)
    factor = 1.0 - np.asarray(launch_discount, float)
    cost = np.where(soyuz, p.soyuz_launch_musd * n_soyuz, p.heavy_musd_per_kg * m * units) * factor
    return cost, n.astype(np.int64)


def total_cost(production_musd: float, launch_musd: float, ops_rate_musd_per_sat_yr: float, n_sats: int,
               n_flight_units: int = 0, n_launches: int = 0, bus_name: str = "",
               params: CostParams | None = None) -> CostBreakdown:
    """Combine cost elements; operations scale with operational satellites."""
    p = _cost(params)
    if min(production_musd, launch_musd, ops_rate_musd_per_sat_yr, n_sats) < 0:
        raise ValueError("cost inputs must be >= 0")
    ops = ops_rate_musd_per_sat_yr * n_sats * p.horizon_yr
    return CostBreakdown(production_musd, launch_musd, ops, n_flight_units, n_launches, bus_name)
