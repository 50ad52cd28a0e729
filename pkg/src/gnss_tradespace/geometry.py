"""User grid, visibility and GDOP statistics for Walker constellations."""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .config import GeometryParams, OrbitParams, default_model
from .orbits import ConstellationEphemeris, WalkerDelta, propagate

# numba probes TBB first and warns when the installed one is too old
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class GeometryError(ValueError):
    pass


class InsufficientGeometry(GeometryError):
    """Fewer than four satellites in view."""


class SingularGeometry(GeometryError):
    """Normal matrix is singular (degenerate line-of-sight set)."""


@dataclass(frozen=True)
class UserGrid:
    lat_deg: np.ndarray
    lon_deg: np.ndarray
    positions: np.ndarray  # (n, 3) km, Earth-fixed

    def __len__(self) -> int:
        return len(self.lat_deg)


def build_grid(n_points: int, radius_km: float | None = None) -> UserGrid:
    """Fibonacci (golden-angle) lattice: ``n_points`` near-equal-area sites."""
    if n_points < 4:
        raise ValueError("n_points must be at least 4")
    if radius_km is None:
        radius_km = default_model().orbit.earth_radius_km
    i = np.arange(n_points, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n_points
    lon = np.mod(i * _GOLDEN_ANGLE + np.pi, 2.0 * np.pi) - np.pi
    lat = np.arcsin(z)
    rho = np.sqrt(1.0 - z * z)
    pos = radius_km * np.column_stack([rho * np.cos(lon), rho * np.sin(lon), z])
    return UserGrid(np.degrees(lat), np.degrees(lon), np.ascontiguousarray(pos))


def elevation(user, sat):
    """Elevation [deg] of ``sat`` above the local horizon of ``user``.

    Broadcasts over leading dimensions; the local vertical is the geocentric
    radial direction.
    """
    user = np.asarray(user, float)
    sat = np.asarray(sat, float)
    los = sat - user
    up = user / np.linalg.norm(user, axis=-1, keepdims=True)
    # arctan2 keeps full precision near the zenith, unlike arcsin
    vertical = np.sum(los * up, axis=-1)
    horizontal = np.linalg.norm(np.cross(los, up), axis=-1)
    return np.degrees(np.arctan2(vertical, horizontal))


def _design_matrix(user, sats) -> np.ndarray:
    los = np.asarray(sats, float) - np.asarray(user, float)
    unit = los / np.linalg.norm(los, axis=1, keepdims=True)
    return np.column_stack([unit, np.ones(len(unit))])


def gdop_instant(user, visible_sats) -> float:
    """GDOP from the line-of-sight unit vectors augmented with a clock column.

    Raises
    ------
    InsufficientGeometry
        Fewer than four satellites.
    SingularGeometry
        The normal matrix cannot be factorised.
    """
    sats = np.atleast_2d(np.asarray(visible_sats, float))
    if sats.size == 0 or len(sats) < 4:
        raise InsufficientGeometry(f"{len(sats) if sats.size else 0} satellites in view, need 4")
    g = _design_matrix(user, sats)
    normal = g.T @ g
    # Cholesky; trace of the inverse is the squared Frobenius norm of L^-1
    scale = np.max(np.diag(normal))
    try:
        chol = np.linalg.cholesky(normal)
    except np.linalg.LinAlgError:
        raise SingularGeometry("normal matrix is not positive definite") from None
    if np.min(np.diag(chol)) ** 2 <= 1e-12 * scale:
        raise SingularGeometry("normal matrix is numerically singular")
    linv = np.linalg.solve(chol, np.eye(4))
    return float(np.sqrt(np.sum(linv * linv)))


@numba.njit(cache=True, parallel=True)
def _gdop_kernel(sat_pos, users, sat_radius, cos_lambda, sin_mask, gdop, nvis):
    n_t, n_s = sat_pos.shape[0], sat_pos.shape[1]
    n_p = users.shape[0]
    for p in numba.prange(n_p):
        ux, uy, uz = users[p, 0], users[p, 1], users[p, 2]
        ur = np.sqrt(ux * ux + uy * uy + uz * uz)
        vx, vy, vz = ux / ur, uy / ur, uz / ur
        a = np.zeros((4, 4))
        li = np.zeros((4, 4))
        for t in range(n_t):
            for i in range(4):
                for j in range(4):
                    a[i, j] = 0.0
            n = 0
            for s in range(n_s):
                sx, sy, sz = sat_pos[t, s, 0], sat_pos[t, s, 1], sat_pos[t, s, 2]
                # central-angle prefilter, slightly loose; exact test follows
                if sx * vx + sy * vy + sz * vz < sat_radius * cos_lambda - 1e-6 * sat_radius:
                    continue
                dx, dy, dz = sx - ux, sy - uy, sz - uz
                d = np.sqrt(dx * dx + dy * dy + dz * dz)
                ex, ey, ez = dx / d, dy / d, dz / d
                if ex * vx + ey * vy + ez * vz < sin_mask:
                    continue
                n += 1
                a[0, 0] += ex * ex
                a[0, 1] += ex * ey
                a[0, 2] += ex * ez
                a[0, 3] += ex
                a[1, 1] += ey * ey
                a[1, 2] += ey * ez
                a[1, 3] += ey
                a[2, 2] += ez * ez
                a[2, 3] += ez
                a[3, 3] += 1.0
            nvis[p, t] = n
            if n < 4:
                gdop[p, t] = np.inf
                continue
            for i in range(4):
                for j in range(i):
                    a[i, j] = a[j, i]
            # Cholesky in place (lower triangle)
            ok = True
            scale = max(max(a[0, 0], a[1, 1]), max(a[2, 2], a[3, 3]))
            for j in range(4):
                s_ = a[j, j]
                for k in range(j):
                    s_ -= a[j, k] * a[j, k]
                if s_ <= 1e-12 * scale:
                    ok = False
                    break
                djj = np.sqrt(s_)
                a[j, j] = djj
                for i in range(j + 1, 4):
                    s2 = a[i, j]
                    for k in range(j):
                        s2 -= a[i, k] * a[j, k]
                    a[i, j] = s2 / djj
            if not ok:
                gdop[p, t] = np.inf
                continue
            # invert L by forward substitution, accumulate ||L^-1||_F^2
            tr = 0.0
            for c in range(4):
                for i in range(4):
                    li[i, c] = 0.0
                li[c, c] = 1.0 / a[c, c]
                tr += li[c, c] * li[c, c]
                for i in range(c + 1, 4):
                    s3 = 0.0
                    for k in range(c, i):
                        s3 -= a[i, k] * li[k, c]
                    li[i, c] = s3 / a[i, i]
                    tr += li[i, c] * li[i, c]
            gdop[p, t] = np.sqrt(tr)


def _visibility_cone(radius_km: float, earth_radius_km: float, mask_deg: float) -> float:
    """cos of the Earth-central angle at which a satellite sits at ``mask_deg``."""
    e = np.radians(mask_deg)
    lam = np.pi / 2 - e - np.arcsin(earth_radius_km * np.cos(e) / radius_km)
    return float(np.cos(lam))


def gdop_samples(
    eph: ConstellationEphemeris,
    grid: UserGrid,
    mask_deg: float = 5.0,
    stride: int = 1,
    chunk: int = 2048,
):
    """Yield ``(slice, gdop, n_visible)`` blocks of shape ``(points, times)``.

    Samples with fewer than four satellites in view, or a singular normal
    matrix, carry ``inf``.
    """
    sat = np.ascontiguousarray(eph.positions[::stride])
    users = grid.positions
    earth_r = float(np.linalg.norm(users[0]))
    if eph.n_sats:
        cos_lam = _visibility_cone(eph.radius_km, earth_r, mask_deg)
    else:
        cos_lam = 1.0
    sin_mask = float(np.sin(np.radians(mask_deg)))
    for start in range(0, len(users), chunk):
        sl = slice(start, min(start + chunk, len(users)))
        pts = np.ascontiguousarray(users[sl])
        g = np.empty((len(pts), sat.shape[0]))
        nv = np.empty((len(pts), sat.shape[0]), dtype=np.int32)
        _gdop_kernel(sat, pts, float(eph.radius_km), cos_lam, sin_mask, g, nv)
        yield sl, g, nv


@dataclass(frozen=True)
class GdopField:
    """Time-averaged GDOP over a user grid.

    ``per_latitude_worst`` maps the centre of each latitude band to the
    largest per-point average inside it (lattice latitudes are all distinct,
    so sites are grouped into bands of ``lat_bin_deg``).
    """

    lat_deg: np.ndarray
    per_point_avg: np.ndarray
    worst_site: float
    per_latitude_worst: dict
    coverage: float
    n_samples: int

    @property
    def feasible(self) -> bool:
        return self.coverage == 1.0 and bool(np.isfinite(self.worst_site))


def latitude_profile(lat_deg: np.ndarray, values: np.ndarray, bin_deg: float = 1.0) -> dict:
    idx = np.floor((np.asarray(lat_deg) + 90.0) / bin_deg).astype(int)
    idx = np.minimum(idx, int(np.ceil(180.0 / bin_deg)) - 1)
    out = {}
    for b in np.unique(idx):
        centre = round(-90.0 + (b + 0.5) * bin_deg, 6)
        out[centre] = float(np.max(values[idx == b]))
    return out


def _stride(eph: ConstellationEphemeris, dop_step: float | None) -> int:
    if dop_step is None or eph.step_s == 0:
        return 1
    ratio = dop_step / eph.step_s
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-6 * max(1.0, ratio):
        raise ValueError(f"dop_step {dop_step} is not a multiple of the ephemeris step {eph.step_s}")
    return stride


def gdop_worst_site(
    eph: ConstellationEphemeris,
    grid: UserGrid,
    mask_deg: float = 5.0,
    dop_step: float | None = None,
    lat_bin_deg: float = 1.0,
    min_span_s: float = 86400.0,
) -> GdopField:
    """Per-site time-averaged GDOP and its worst (largest) value.

    ``dop_step`` must be a whole multiple of the ephemeris step (``None`` uses
    every sample).  A site that ever sees fewer than four satellites has an
    infinite average, which makes ``worst_site`` infinite as well.
    """
    if eph.times[-1] + eph.step_s < min_span_s - 1e-6:
        raise ValueError(f"ephemeris spans {eph.times[-1] + eph.step_s:.0f} s, need {min_span_s:.0f} s")
    stride = _stride(eph, dop_step)
    avg = np.empty(len(grid))
    covered = 0
    total = 0
    for sl, g, nv in gdop_samples(eph, grid, mask_deg, stride):
        with np.errstate(invalid="ignore"):
            avg[sl] = np.mean(g, axis=1)
        covered += int(np.count_nonzero(nv >= 4))
        total += nv.size
    worst = float(np.max(avg))
    coverage = covered / total if total else 0.0
    return GdopField(
        lat_deg=grid.lat_deg,
        per_point_avg=avg,
        worst_site=worst,
        per_latitude_worst=latitude_profile(grid.lat_deg, avg, lat_bin_deg),
        coverage=coverage,
        n_samples=total,
    )


def coverage_check(
    eph: ConstellationEphemeris,
    grid: UserGrid,
    mask_deg: float = 5.0,
    dop_step: float | None = None,
) -> float:
    """Fraction of (site, time) samples with at least four satellites in view."""
    if eph.n_sats < 4:
        return 0.0
    covered = total = 0
    for _, _, nv in gdop_samples(eph, grid, mask_deg, _stride(eph, dop_step)):
        covered += int(np.count_nonzero(nv >= 4))
        total += nv.size
    return covered / total


def constellation_ephemeris(
    cfg: WalkerDelta,
    geo: GeometryParams | None = None,
    orbit: OrbitParams | None = None,
) -> ConstellationEphemeris:
    """Ephemeris sampled directly at the DOP step (propagation step x factor)."""
    model = default_model()
    geo = geo or model.geometry
    return propagate(cfg, geo.duration_s, geo.prop_step_deg * geo.dop_step_factor, orbit or model.orbit)


def evaluate_geometry(
    cfg: WalkerDelta,
    grid: UserGrid,
    geo: GeometryParams | None = None,
    orbit: OrbitParams | None = None,
) -> GdopField:
    geo = geo or default_model().geometry
    eph = constellation_ephemeris(cfg, geo, orbit)
    return gdop_worst_site(eph, grid, geo.mask_deg, None, geo.lat_bin_deg, min_span_s=geo.duration_s)


@dataclass
class FailureStats:
    """Worst-site GDOP change after removing satellites at random."""

    intact: GdopField
    removed: list
    deltas: list  # float, or None where coverage broke
    failed_fields: list = field(repr=False, default_factory=list)

    @property
    def valid_deltas(self) -> np.ndarray:
        return np.array([d for d in self.deltas if d is not None], float)

    @property
    def max_delta(self) -> float:
        v = self.valid_deltas
        return float(v.max()) if v.size else float("nan")

    @property
    def mean_delta(self) -> float:
        v = self.valid_deltas
        return float(v.mean()) if v.size else float("nan")

    @property
    def n_broken(self) -> int:
        return sum(d is None for d in self.deltas)

    @property
    def spread(self) -> float:
        """Largest pairwise difference between trial worst-site values."""
        v = self.valid_deltas
        return float(v.max() - v.min()) if v.size else float("nan")


def failure_gdop_delta(
    cfg: WalkerDelta,
    n_trials: int,
    seed: int,
    grid: UserGrid,
    n_remove: int = 1,
    geo: GeometryParams | None = None,
    orbit: OrbitParams | None = None,
) -> FailureStats:
    """Worst-site GDOP increase for ``n_trials`` random satellite failures.

    Each trial removes ``n_remove`` distinct satellites drawn uniformly with
    a generator seeded by ``seed``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    geo = geo or default_model().geometry
    eph = constellation_ephemeris(cfg, geo, orbit)
    intact = gdop_worst_site(eph, grid, geo.mask_deg, None, geo.lat_bin_deg, geo.duration_s)
    rng = np.random.default_rng(seed)
    stats = FailureStats(intact=intact, removed=[], deltas=[])
    for _ in range(n_trials):
        idx = sorted(int(i) for i in rng.choice(eph.n_sats, size=n_remove, replace=False))
        failed = eph
        for i in reversed(idx):
            failed = failed.without(i)
        f = gdop_worst_site(failed, grid, geo.mask_deg, None, geo.lat_bin_deg, geo.duration_s)
        stats.removed.append(idx)
        stats.failed_fields.append(f)
        stats.deltas.append(f.worst_site - intact.worst_site if f.feasible else None)
    return stats


def median_elevation_rate(h, geo: GeometryParams | None = None) -> float:
    """Representative median elevation-angle rate [mdeg/s] for an altitude option."""
    geo = geo or default_model().geometry
    table = geo.elevation_rate_mdeg_s
    key = int(round(float(h)))
    if key != float(h) or key not in table:
        raise KeyError(f"no elevation-rate entry for altitude {h} km")
    return float(table[key])


def estimate_median_elevation_rate(
    cfg: WalkerDelta,
    grid: UserGrid,
    duration_s: float,
    step_deg: float = 0.5,
    mask_deg: float = 5.0,
    orbit: OrbitParams | None = None,
) -> float:
    """Median |d(elevation)/dt| [mdeg/s] over visible user-satellite pairs.

    Central differences on an ephemeris sampled every ``step_deg`` of mean
    anomaly.
    """
    eph = propagate(cfg, duration_s, step_deg, orbit)
    dt = eph.step_s
    rates = []
    for k in range(1, len(eph.times) - 1):
        el0 = elevation(grid.positions[:, None, :], eph.positions[k - 1][None, :, :])
        el = elevation(grid.positions[:, None, :], eph.positions[k][None, :, :])
        el1 = elevation(grid.positions[:, None, :], eph.positions[k + 1][None, :, :])
        vis = el >= mask_deg
        rates.append(np.abs(el1 - el0)[vis] / (2 * dt))
    return float(np.median(np.concatenate(rates)) * 1000.0)


class GdopCache:
    """Memo of GDOP results keyed by constellation and geometry settings.

    Readers never block each other's results; inserts take a lock so each key
    is computed once per process.
    """

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(cfg: WalkerDelta, geo: GeometryParams, orbit: OrbitParams) -> tuple:
        return cfg.key() + (
            geo.grid_points, geo.mask_deg, geo.prop_step_deg, geo.dop_step_factor, geo.duration_s,
            orbit.mu_km3_s2, orbit.earth_radius_km, orbit.earth_rotation_rad_s,
        )

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value) -> None:
        with self._lock:
            self._data.setdefault(key, value)

    def __contains__(self, key) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def items(self):
        return list(self._data.items())
