"""Satellite sizing: link budget, power, subsystem masses, delta-V, dry and wet mass."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import OrbitParams, SizingParams, default_model
from .orbits import ConstraintViolation, max_eclipse_duration, max_slant_range, orbital_period

SPEED_OF_LIGHT_M_S = 299_792_458.0
EOL_STRATEGIES = ("bau", "deorbit")


class SizingInfeasible(ValueError):
    """The mass chain has no physical solution (e.g. non-positive denominator)."""


def _params(sizing: SizingParams | None, orbit: OrbitParams | None):
    m = default_model()
    return (sizing if sizing is not None else m.sizing), (orbit if orbit is not None else m.orbit)


@dataclass(frozen=True)
class PowerBudget:
    p_tx_per_freq_w: tuple[float, ...]
    p_tx_total_w: float
    p_payload_w: float
    p_spacecraft_w: float
    p_bol_w: float
    p_eol_area_w_m2: float
    solar_array_area_m2: float


@dataclass(frozen=True)
class EpsSizing:
    m_sa_kg: float
    m_bat_kg: float
    m_pcu_kg: float
    m_dist_kg: float
    m_eps_kg: float
    p_bol_w: float
    p_eol_area_w_m2: float
    a_sa_m2: float


@dataclass(frozen=True)
class DeltaVBudget:
    adcs_ms: float
    maneuver_ms: float
    disposal_ms: float
    eol_strategy: str

    @property
    def total_ms(self) -> float:
        return self.adcs_ms + self.maneuver_ms + self.disposal_ms


@dataclass(frozen=True)
class SizingReport:
    power: PowerBudget
    dv: DeltaVBudget
    m_eps_kg: float
    m_thermal_kg: float
    m_propulsion_kg: float
    m_propellant_kg: float
    ttc_redundancy_n: float
    m_dry_initial_kg: float
    m_rad_kg: float
    dry_mass_delta: float
    m_dry_kg: float
    m_wet_kg: float


def link_tx_power(rx_power_dbw: float, slant_range_km: float, freq_hz: float,
                  sizing: SizingParams | None = None) -> float:
    """Transmit power [W] on one carrier to deliver ``rx_power_dbw`` at the slant range."""
    z, _ = _params(sizing, None)
    fspl_gain = 20.0 * math.log10(SPEED_OF_LIGHT_M_S / (4.0 * math.pi * freq_hz * slant_range_km * 1e3))
    p_dbw = (rx_power_dbw - z.tx_gain_dbi - z.rx_gain_dbi
             + z.polarization_loss_db + z.excess_loss_db - fspl_gain)
    return 10 ** (p_dbw / 10.0)


def tx_power(rx_power_dbw: float, h: float, n_freqs: int,
             sizing: SizingParams | None = None, orbit: OrbitParams | None = None) -> tuple[float, ...]:
    """Per-carrier transmit power [W] for the first ``n_freqs`` carriers."""
    z, o = _params(sizing, orbit)
    if not 1 <= n_freqs <= len(z.carrier_freqs_hz):
        raise ValueError(f"n_freqs must be in 1..{len(z.carrier_freqs_hz)}")
    r = float(max_slant_range(h, z.link_elevation_deg, o))
    return tuple(link_tx_power(rx_power_dbw, r, f, z) for f in z.carrier_freqs_hz[:n_freqs])


def payload_and_bus_power(p_tx_total_w: float, sizing: SizingParams | None = None) -> tuple[float, float]:
    """Payload and spacecraft power consumption [W]."""
    z, _ = _params(sizing, None)
    if p_tx_total_w < 0:
        raise ValueError("transmit power must be >= 0")
    p_pl = (p_tx_total_w / z.twta_efficiency + z.payload_fixed_power_w) / (1.0 - z.payload_thermal_fraction)
    return p_pl, z.bus_power_factor * p_pl


def eps_sizing(p_sc_w: float, h: float, lifetime_yr: float,
               sizing: SizingParams | None = None, orbit: OrbitParams | None = None) -> EpsSizing:
    """Solar array, battery, PCU and distribution masses for a load of ``p_sc_w``."""
    z, o = _params(sizing, orbit)
    if p_sc_w <= 0:
        raise ValueError("spacecraft power must be positive")
    period = float(orbital_period(h, o))
    t_e = float(max_eclipse_duration(h, o))
    t_d = period - t_e
    p_sa = (p_sc_w * t_e / z.eclipse_efficiency + p_sc_w * t_d / z.daylight_efficiency) / t_d
    p_bol_area = (z.cell_efficiency * z.solar_constant_w_m2 * z.inherent_degradation
                  * math.cos(math.radians(z.sun_incidence_deg)))
    p_eol_area = p_bol_area * (1.0 - z.array_degradation_per_yr) ** lifetime_yr
    a_sa = p_sa / p_eol_area
    m_sa = p_sa / z.array_specific_power_w_kg
    p_bol = p_bol_area * a_sa
    m_bat = p_sc_w * t_e / (3600.0 * z.battery_dod * z.battery_transmission_eff * z.battery_energy_density_wh_kg)
    m_pcu = z.pcu_kg_per_w * p_bol
    m_eps = (m_sa + m_bat + m_pcu) / (1.0 - z.distribution_fraction)
    return EpsSizing(m_sa, m_bat, m_pcu, z.distribution_fraction * m_eps, m_eps, p_bol, p_eol_area, a_sa)


def thermal_mass(p_bol_w: float, sizing: SizingParams | None = None) -> float:
    z, _ = _params(sizing, None)
    return z.thermal_kg_per_w * p_bol_w


def _is_leo(h: float, z: SizingParams) -> bool:
    return any(float(k) == float(h) for k in z.leo_maneuver_m_s_yr)


def hohmann_raise_dv(r_a_km: float, r_b_km: float, mu: float) -> float:
    """Two-burn circular-to-circular transfer delta-V [km/s]."""
    a_t = r_a_km + r_b_km
    first = math.sqrt(2.0 / r_a_km - 2.0 / a_t) - math.sqrt(1.0 / r_a_km)
    second = math.sqrt(1.0 / r_b_km) - math.sqrt(2.0 / r_b_km - 2.0 / a_t)
    return math.sqrt(mu) * (first + second)


def perigee_lowering_dv(r_a_km: float, r_b_km: float, mu: float) -> float:
    """Single burn from a circular orbit at ``r_a`` to an ellipse with perigee ``r_b`` [km/s]."""
    return math.sqrt(mu / r_a_km) * (1.0 - math.sqrt(2.0 * r_b_km / (r_a_km + r_b_km)))


def delta_v_budget(h: float, lifetime_yr: float, strategy: str = "bau",
                   sizing: SizingParams | None = None, orbit: OrbitParams | None = None) -> DeltaVBudget:
    """ADCS, station-keeping and disposal delta-V [m/s]."""
    z, o = _params(sizing, orbit)
    if strategy not in EOL_STRATEGIES:
        raise ValueError(f"unknown EOL strategy {strategy!r}")
    m0 = z.adcs_ref_mass_kg
    adcs = z.isp_s * z.g0_m_s2 * math.log((m0 + z.adcs_propellant_kg_yr * z.adcs_ref_lifetime_yr) / m0)
    leo = _is_leo(h, z)
    if leo:
        rate = next(v for k, v in z.leo_maneuver_m_s_yr.items() if float(k) == float(h))
        maneuver = lifetime_yr * rate
    else:
        maneuver = lifetime_yr * 365.0 * z.meo_maneuver_m_s / z.meo_maneuver_interval_days
    r_a = o.earth_radius_km + h
    if strategy == "bau" and not leo:
        disposal = hohmann_raise_dv(r_a, r_a + z.graveyard_raise_km, o.mu_km3_s2)
    else:
        disposal = perigee_lowering_dv(r_a, o.earth_radius_km + z.deorbit_perigee_km, o.mu_km3_s2)
    return DeltaVBudget(adcs, maneuver, disposal * 1e3, strategy)


def propellant_and_propulsion(p_payload_w: float, dv_total_ms: float,
                              sizing: SizingParams | None = None) -> tuple[float, float]:
    """Propellant and propulsion-subsystem mass [kg].

    The rocket equation runs on the power-law dry-mass estimate, not on the
    subsystem roll-up, so there is no circular dependency.
    """
    z, _ = _params(sizing, None)
    m_est = z.power_mass_coeff * p_payload_w ** z.power_mass_exponent
    m_prop = m_est * math.expm1(dv_total_ms / (z.g0_m_s2 * z.isp_s))
    return m_prop, z.propulsion_base_kg + z.propulsion_coeff * m_prop ** (2.0 / 3.0)


def ttc_redundancy(lifetime_yr: float, sizing: SizingParams | None = None) -> float:
    """Effective TT&C redundancy factor (not necessarily an integer)."""
    z, _ = _params(sizing, None)
    if lifetime_yr <= 0:
        raise ValueError("lifetime must be positive")
    r = z.ttc_reliability_ref
    return math.log(1.0 - r) / math.log(1.0 - r ** (lifetime_yr / z.ttc_lifetime_ref_yr))


def dry_mass(m_eps: float, m_thermal: float, m_propulsion: float, n: float,
             sizing: SizingParams | None = None) -> float:
    """Initial dry mass [kg] from the explicit subsystems and fixed mass shares."""
    z, _ = _params(sizing, None)
    denom = 1.0 - z.ttc_fraction * n - z.adcs_fraction - z.structure_fraction
    numer = m_eps + m_thermal + m_propulsion
    if z.payload_mass_model == "fraction":
        denom -= z.payload_fraction
    else:
        numer += z.payload_mass_kg
    if denom <= 0:
        raise SizingInfeasible(f"mass-share denominator is {denom:.4f} (TT&C factor n={n:.3f})")
    return numer / denom


def shield_thickness_mm(h: float, inclination_deg: float, lifetime_yr: float,
                        sizing: SizingParams | None = None) -> float:
    z, _ = _params(sizing, None)
    by_inc = next((v for k, v in z.shield_thickness_mm.items() if float(k) == float(h)), None)
    row = None if by_inc is None else next(
        (v for k, v in by_inc.items() if float(k) == float(inclination_deg)), None)
    if row is None:
        raise ConstraintViolation(f"no shielding data for {h} km / {inclination_deg} deg")
    lifetimes = [float(x) for x in z.shield_lifetimes_yr]
    if float(lifetime_yr) not in lifetimes:
        raise ConstraintViolation(f"no shielding data for a {lifetime_yr}-year lifetime")
    return float(row[lifetimes.index(float(lifetime_yr))])


def shell_mass(m_dry_i: float, thickness_m: float, sizing: SizingParams | None = None) -> float:
    """Aluminium shell mass around a sphere of the satellite's bulk volume."""
    z, _ = _params(sizing, None)
    r = (3.0 * m_dry_i / z.satellite_density_kg_m3 / (4.0 * math.pi)) ** (1.0 / 3.0)
    return z.aluminium_density_kg_m3 * 4.0 * math.pi / 3.0 * ((r + thickness_m) ** 3 - r**3)


def radiation_penalty(h: float, inclination_deg: float, lifetime_yr: float, m_dry_i: float,
                      sizing: SizingParams | None = None) -> float:
    t_mm = shield_thickness_mm(h, inclination_deg, lifetime_yr, sizing)
    return shell_mass(m_dry_i, t_mm / 1000.0, sizing)


def size_satellite(
    altitude_km: float,
    inclination_deg: float,
    rx_power_dbw: float,
    n_freqs: int,
    lifetime_yr: float,
    eol_strategy: str = "bau",
    dry_mass_delta: float = 0.0,
    sizing: SizingParams | None = None,
    orbit: OrbitParams | None = None,
) -> SizingReport:
    """Run the full mass chain for one satellite design.

    ``dry_mass_delta`` scales the final dry mass (scenario knob); propellant is
    left unchanged.
    """
    z, o = _params(sizing, orbit)
    key = (altitude_km, inclination_deg, rx_power_dbw, n_freqs, lifetime_yr, eol_strategy,
           dry_mass_delta, id(z), id(o))
    hit = _MEMO.get(key)
    if hit is not None and hit[0] is z and hit[1] is o:
        return hit[2]
    report = _size(altitude_km, inclination_deg, rx_power_dbw, n_freqs, lifetime_yr,
                   eol_strategy, dry_mass_delta, z, o)
    if len(_MEMO) > 20000:
        _MEMO.clear()
    _MEMO[key] = (z, o, report)
    return report


# params objects are unhashable (dict fields), so the memo is keyed on identity
_MEMO: dict = {}


def _size(h, inc, rx, nf, life, eol, delta, z: SizingParams, o: OrbitParams) -> SizingReport:
    per_freq = tx_power(rx, h, nf, z, o)
    p_tx = math.fsum(per_freq)
    p_pl, p_sc = payload_and_bus_power(p_tx, z)
    eps = eps_sizing(p_sc, h, life, z, o)
    m_th = thermal_mass(eps.p_bol_w, z)
    dv = delta_v_budget(h, life, eol, z, o)
    m_prop, m_ps = propellant_and_propulsion(p_pl, dv.total_ms, z)
    n = ttc_redundancy(life, z)
    m_dry_i = dry_mass(eps.m_eps_kg, m_th, m_ps, n, z)
    m_rad = radiation_penalty(h, inc, life, m_dry_i, z)
    m_dry = (m_dry_i + m_rad) * (1.0 + delta)
    power = PowerBudget(per_freq, p_tx, p_pl, p_sc, eps.p_bol_w, eps.p_eol_area_w_m2, eps.a_sa_m2)
    return SizingReport(power, dv, eps.m_eps_kg, m_th, m_ps, m_prop, n, m_dry_i, m_rad, delta,
                        m_dry, m_dry + m_prop)
