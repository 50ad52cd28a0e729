"""Ranging-error budget (UERE) and user navigation error."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import GeometryParams, SignalParams, default_model
from .geometry import median_elevation_rate

SPEED_OF_LIGHT_M_S = 299_792_458.0


def _sig(params: SignalParams | None) -> SignalParams:
    return params if params is not None else default_model().signal


@dataclass(frozen=True)
class SignalConfig:
    rx_power_dbw: float
    n_freqs: int
    t_wait_min: float = 1.0

    def __post_init__(self):
        if self.n_freqs not in (1, 2, 3):
            raise ValueError(f"n_freqs must be 1, 2 or 3, got {self.n_freqs}")
        if self.t_wait_min < 0:
            raise ValueError("t_wait_min must be >= 0")


@dataclass(frozen=True)
class UereBudget:
    sisre_m: float
    tropo_m: float
    iono_m: float
    code_track_m: float
    multipath_m: float
    rss_m: float
    total_rms_m: float
    decorrelation_min: float

    @property
    def components(self) -> tuple[float, ...]:
        return (self.sisre_m, self.tropo_m, self.iono_m, self.code_track_m, self.multipath_m)


def noise_density(t_ant_k: float, noise_figure_db: float, boltzmann: float = 1.38e-23) -> float:
    """Receiver thermal noise density N0 [dBW/Hz]."""
    t_amp = 290.0 * (10 ** (noise_figure_db / 10.0) - 1.0)
    t_sys = t_ant_k + t_amp
    if t_sys <= 0:
        raise ValueError("system noise temperature must be positive")
    return 10.0 * math.log10(boltzmann * t_sys)


def carrier_to_noise(rx_power_dbw: float, params: SignalParams | None = None) -> float:
    """C/N0 [dB-Hz] for a received signal power."""
    p = _sig(params)
    return rx_power_dbw - noise_density(p.antenna_temp_k, p.noise_figure_db, p.boltzmann_j_k)


def code_tracking_formula(cn0_dbhz: float, params: SignalParams | None = None) -> float:
    """Early-minus-late power discriminator tracking noise [m], as printed.

    Evaluated verbatim; note it does not reproduce the tabulated values
    (about 0.38 m instead of 0.567 m at 45.9 dB-Hz).
    """
    p = _sig(params)
    cn0 = 10 ** (cn0_dbhz / 10.0)
    if cn0 <= 0 or not math.isfinite(cn0):
        raise ValueError("C/N0 must be positive")
    tc = 1.0 / p.chip_rate_hz
    btc = p.front_end_bandwidth_hz * tc
    d = p.correlator_spacing_chips
    shape = 1.0 / btc + btc / (math.pi - 1.0) * (d - 1.0 / btc) ** 2
    thermal = math.sqrt(p.loop_bandwidth_hz / (2.0 * cn0) * shape)
    squaring = math.sqrt(1.0 + 2.0 / (p.integration_time_s * cn0 * (2.0 - d)))
    return thermal * squaring * SPEED_OF_LIGHT_M_S / p.chip_rate_hz


def code_tracking_sigma(cn0_dbhz: float, mode: str | None = None, params: SignalParams | None = None) -> float:
    """1-sigma code tracking noise [m].

    ``mode="table"`` returns the tabulated value for the canonical received
    powers (the C/N0 must correspond to one of them within 0.1 dB);
    ``mode="formula"`` evaluates the discriminator expression.
    """
    p = _sig(params)
    mode = mode or p.code_tracking_mode
    if cn0_dbhz <= 0:
        raise ValueError("C/N0 must be positive")
    if mode == "formula":
        return code_tracking_formula(cn0_dbhz, p)
    if mode != "table":
        raise ValueError(f"unknown code tracking mode {mode!r}")
    n0 = noise_density(p.antenna_temp_k, p.noise_figure_db, p.boltzmann_j_k)
    power = cn0_dbhz + n0
    for table_power, sigma in p.code_tracking_table_m.items():
        if abs(float(table_power) - power) < 0.1:
            return float(sigma)
    raise KeyError(f"C/N0 {cn0_dbhz:.2f} dB-Hz is not a tabulated power level")


def multipath_sigma(elev_deg: float, params: SignalParams | None = None) -> float:
    """Elevation-dependent multipath 1-sigma [m] (BPSK-R(1), 8 MHz front end)."""
    a, b, c = _sig(params).multipath_coeffs
    return a + b * math.exp(-c * elev_deg)


def decorrelation_time(elev_rate_mdegs: float) -> float:
    """Multipath decorrelation time [min] for an elevation rate [mdeg/s]."""
    if elev_rate_mdegs <= 0:
        raise ValueError("elevation rate must be positive")
    rate_rad_s = math.radians(elev_rate_mdegs / 1000.0)
    return 1.0 / (10.0 * rate_rad_s) / 60.0


def residual_multipath(sigma_mp: float, t_wait: float, tau: float) -> float:
    """Multipath left after averaging for ``t_wait`` (same unit as ``tau``)."""
    if t_wait > tau:
        return 0.0
    return sigma_mp * (1.0 - t_wait / tau)


def uere(
    sig: SignalConfig,
    h: float,
    params: SignalParams | None = None,
    geo: GeometryParams | None = None,
) -> UereBudget:
    """Ranging error budget for one signal design at altitude ``h`` [km]."""
    p = _sig(params)
    iono = p.iono_single_m if sig.n_freqs == 1 else p.iono_multi_m
    code = code_tracking_sigma(carrier_to_noise(sig.rx_power_dbw, p), params=p)
    tau = decorrelation_time(median_elevation_rate(h, geo))
    mp = residual_multipath(multipath_sigma(p.multipath_elev_deg, p), sig.t_wait_min, tau)
    rss = math.sqrt(p.sisre_m**2 + p.tropo_m**2 + iono**2 + code**2 + mp**2)
    total = rss * p.triple_freq_factor if sig.n_freqs == 3 else rss
    return UereBudget(p.sisre_m, p.tropo_m, iono, code, mp, rss, total, tau)


def une(uere_m, gdop):
    """User navigation error [m]."""
    return uere_m * gdop
