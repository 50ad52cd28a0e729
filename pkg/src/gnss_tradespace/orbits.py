"""Walker-Delta constellations on circular two-body orbits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import OrbitParams, default_model


class ConstraintViolation(ValueError):
    """A constellation definition breaks a Walker-Delta invariant."""


def _orbit_params(params: OrbitParams | None) -> OrbitParams:
    return params if params is not None else default_model().orbit


@dataclass(frozen=True)
class OrbitShell:
    altitude_km: float
    inclination_deg: float

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ConstraintViolation(f"altitude must be positive, got {self.altitude_km}")
        if not 0 <= self.inclination_deg <= 180:
            raise ConstraintViolation(f"inclination out of range: {self.inclination_deg}")


@dataclass(frozen=True)
class WalkerDelta:
    """Walker-Delta pattern ``n_sats/n_planes/phasing_f`` on one shell."""

    shell: OrbitShell
    n_sats: int
    n_planes: int
    phasing_f: int = 1

    def __post_init__(self):
        if self.n_planes < 1 or self.n_sats < 0:
            raise ConstraintViolation(f"invalid counts {self.n_sats}/{self.n_planes}")
        if self.n_sats % self.n_planes:
            raise ConstraintViolation(
                f"{self.n_sats} satellites cannot be split evenly over {self.n_planes} planes"
            )
        if not 0 <= self.phasing_f < self.n_planes:
            raise ConstraintViolation(f"phasing F={self.phasing_f} outside [0, {self.n_planes})")

    @property
    def sats_per_plane(self) -> int:
        return self.n_sats // self.n_planes

    def key(self) -> tuple:
        return (self.shell.altitude_km, self.n_sats, self.shell.inclination_deg, self.n_planes, self.phasing_f)


@dataclass(frozen=True)
class ConstellationEphemeris:
    """Earth-fixed satellite positions sampled on a uniform time grid.

    ``positions`` has shape ``(n_times, n_sats, 3)`` in km.
    """

    times: np.ndarray
    positions: np.ndarray
    radius_km: float

    def __post_init__(self):
        self.times.setflags(write=False)
        self.positions.setflags(write=False)

    @property
    def step_s(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def n_sats(self) -> int:
        return self.positions.shape[1]

    def without(self, index: int) -> "ConstellationEphemeris":
        """Copy with one satellite removed."""
        pos = np.delete(self.positions, index, axis=1)
        return ConstellationEphemeris(self.times.copy(), pos, self.radius_km)


def walker_delta_elements(cfg: WalkerDelta) -> np.ndarray:
    """RAAN and argument of latitude at epoch for every satellite, degrees.

    Returns an ``(n_sats, 2)`` array ordered plane by plane.
    """
    s = cfg.sats_per_plane
    plane = np.repeat(np.arange(cfg.n_planes), s)
    slot = np.tile(np.arange(s), cfg.n_planes)
    raan = plane * 360.0 / cfg.n_planes
    anomaly = slot * 360.0 / s + plane * cfg.phasing_f * 360.0 / cfg.n_sats
    return np.column_stack([raan, np.mod(anomaly, 360.0)])


def orbital_period(h, params: OrbitParams | None = None):
    """Circular orbit period [s] for altitude ``h`` [km]."""
    p = _orbit_params(params)
    return 2.0 * np.pi * np.sqrt((p.earth_radius_km + np.asarray(h, float)) ** 3 / p.mu_km3_s2)


def max_eclipse_duration(h, params: OrbitParams | None = None):
    """Longest umbra passage per orbit [s] (cylindrical shadow, beta angle 0)."""
    p = _orbit_params(params)
    r = p.earth_radius_km + np.asarray(h, float)
    return orbital_period(h, p) * np.arcsin(p.earth_radius_km / r) / 3.0


def max_slant_range(h, elev_min_deg: float, params: OrbitParams | None = None):
    """User-satellite range [km] at the minimum elevation angle."""
    p = _orbit_params(params)
    re = p.earth_radius_km
    eta = np.radians(elev_min_deg)
    return -re * np.sin(eta) + np.sqrt((re + np.asarray(h, float)) ** 2 - (re * np.cos(eta)) ** 2)


def mean_motion(h, params: OrbitParams | None = None):
    p = _orbit_params(params)
    return np.sqrt(p.mu_km3_s2 / (p.earth_radius_km + np.asarray(h, float)) ** 3)


def step_seconds(h, step_deg: float, params: OrbitParams | None = None) -> float:
    """Time for the mean anomaly to advance ``step_deg`` degrees."""
    return float(np.radians(step_deg) / mean_motion(h, params))


def inertial_positions(cfg: WalkerDelta, times: np.ndarray, params: OrbitParams | None = None) -> np.ndarray:
    p = _orbit_params(params)
    elems = np.radians(walker_delta_elements(cfg))
    raan, u0 = elems[:, 0], elems[:, 1]
    inc = np.radians(cfg.shell.inclination_deg)
    a = p.earth_radius_km + cfg.shell.altitude_km
    u = u0[None, :] + mean_motion(cfg.shell.altitude_km, p) * np.asarray(times, float)[:, None]
    cu, su = np.cos(u), np.sin(u)
    co, so = np.cos(raan)[None, :], np.sin(raan)[None, :]
    ci, si = np.cos(inc), np.sin(inc)
    x = co * cu - so * ci * su
    y = so * cu + co * ci * su
    z = si * su * np.ones_like(co)
    return a * np.stack([x, y, z], axis=-1)


def to_earth_fixed(positions: np.ndarray, times: np.ndarray, params: OrbitParams | None = None) -> np.ndarray:
    """Rotate inertial positions into the Earth-fixed frame (Greenwich on +x at t=0)."""
    p = _orbit_params(params)
    theta = p.earth_rotation_rad_s * np.asarray(times, float)
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    x, y, z = positions[..., 0], positions[..., 1], positions[..., 2]
    return np.stack([c * x + s * y, -s * x + c * y, z], axis=-1)


def propagate(
    cfg: WalkerDelta,
    duration_s: float,
    step_deg: float,
    params: OrbitParams | None = None,
) -> ConstellationEphemeris:
    """Propagate the constellation over ``[0, duration_s]``.

    The time step is the interval over which the mean anomaly advances by
    ``step_deg``; the last sample is the largest multiple not exceeding
    ``duration_s``.
    """
    if duration_s <= 0 or step_deg <= 0:
        raise ValueError("duration_s and step_deg must be positive")
    p = _orbit_params(params)
    dt = step_seconds(cfg.shell.altitude_km, step_deg, p)
    n = int(np.floor(duration_s / dt + 1e-9)) + 1
    times = np.arange(n) * dt
    pos = to_earth_fixed(inertial_positions(cfg, times, p), times, p)
    return ConstellationEphemeris(times, np.ascontiguousarray(pos), p.earth_radius_km + cfg.shell.altitude_km)
