"""Architecture enumeration, feasibility filtering, evaluation and Pareto ranking."""

from __future__ import annotations

import bisect
import concurrent.futures as cf
import itertools
import multiprocessing
import pickle
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd

from . import cost as cost_mod
from .config import ConstraintParams, DecisionOptions, ModelParams, default_model
from .geometry import GdopCache, GdopField, UserGrid, build_grid, evaluate_geometry
from .orbits import OrbitShell, WalkerDelta
from .signal import SignalConfig, uere
from .sizing import EOL_STRATEGIES, size_satellite

DECISIONS = ("altitude_km", "n_sats", "inclination_deg", "n_planes", "rx_power_dbw", "n_freqs", "lifetime_yr")
GEOMETRY_DECISIONS = ("altitude_km", "n_sats", "inclination_deg", "n_planes")
METRIC_COLUMNS = (
    "nav_error_m", "total_cost_busd", "sc_power_w", "dry_mass_kg", "wet_mass_kg",
    "unit_cost_musd", "launch_cost_musd", "gdop", "uere_m", "decorr_time_min",
)
EXTRA_COLUMNS = (
    "pareto_rank", "bus_extrapolated", "heavy_launch", "production_musd", "operations_musd",
    "n_flight_units", "n_launches", "coverage",
)
OBJECTIVES = ("nav_error_m", "total_cost_busd")
REGIMES = ("LEO", "Low MEO", "MEO", "High MEO")


@dataclass(frozen=True)
class DecisionVector:
    altitude_km: int
    n_sats: int
    inclination_deg: int
    n_planes: int
    rx_power_dbw: int
    n_freqs: int
    lifetime_yr: int

    def walker(self, phasing_f: int = 1) -> WalkerDelta:
        return WalkerDelta(OrbitShell(self.altitude_km, self.inclination_deg), self.n_sats, self.n_planes,
                           phasing_f)

    @property
    def geometry_key(self) -> tuple[int, int, int, int]:
        return (self.altitude_km, self.n_sats, self.inclination_deg, self.n_planes)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, d) for d in DECISIONS)


@dataclass(frozen=True)
class Scenario:
    """Values of the uncertain model parameters; the defaults are the baseline."""

    learning: float = 0.85
    dry_mass_delta: float = 0.0
    eol: str = "bau"
    launch_delta: float = 0.0
    t_wait_min: float = 1.0
    ops_rate: float = 0.0

    def __post_init__(self):
        if not 0 < self.learning <= 1:
            raise ValueError("learning must be in (0, 1]")
        if self.dry_mass_delta <= -1:
            raise ValueError("dry_mass_delta must be > -1")
        if self.eol not in EOL_STRATEGIES:
            raise ValueError(f"eol must be one of {EOL_STRATEGIES}")
        if not -1 <= self.launch_delta:
            raise ValueError("launch_delta must be >= -1")
        if self.t_wait_min < 0 or self.ops_rate < 0:
            raise ValueError("t_wait_min and ops_rate must be >= 0")

    @classmethod
    def baseline(cls, model: ModelParams | None = None) -> "Scenario":
        """Baseline scenario consistent with the model's learning factor and wait time."""
        model = model or default_model()
        return cls(learning=model.cost.learning_factor, t_wait_min=model.signal.t_wait_min)


BASELINE = Scenario()

# today's GPS and Galileo constellations expressed as decision vectors
REFERENCE_ARCHITECTURES = {
    "GPS": DecisionVector(20188, 24, 56, 6, -155, 3, 15),
    "GAL": DecisionVector(23229, 27, 56, 3, -155, 3, 15),
}


@dataclass(frozen=True)
class ArchitectureMetrics:
    decision: DecisionVector
    nav_error_m: float
    total_cost_busd: float
    sc_power_w: float
    dry_mass_kg: float
    wet_mass_kg: float
    unit_cost_musd: float
    launch_cost_musd: float
    gdop: float
    uere_m: float
    decorr_time_min: float
    production_musd: float
    operations_musd: float
    n_flight_units: int
    n_launches: int
    bus_extrapolated: bool
    heavy_launch: bool
    coverage: float
    pareto_rank: int | None = None


def orbit_regime(altitude_km):
    """Regime label: LEO, Low MEO, MEO or High MEO."""
    h = np.asarray(altitude_km, float)
    out = np.select([h < 2000, h < 15000, h < 26000], ["LEO", "Low MEO", "MEO"], "High MEO")
    return str(out) if out.ndim == 0 else out


# enumeration and constraints ------------------------------------------------

def enumerate_full_factorial(options: DecisionOptions | None = None) -> list[DecisionVector]:
    """Cartesian product of the option lists in decision order."""
    opts = options or default_model().options
    lists = [getattr(opts, d) for d in DECISIONS]
    if any(len(v) == 0 for v in lists):
        raise ValueError("every decision needs at least one option")
    return [DecisionVector(*combo) for combo in itertools.product(*lists)]


def decisions_frame(vectors: Sequence[DecisionVector]) -> pd.DataFrame:
    data = np.array([v.as_tuple() for v in vectors], dtype=np.int64).reshape(-1, len(DECISIONS))
    return pd.DataFrame(data, columns=list(DECISIONS))


STAGE_NAMES = ("divisibility", "regime", "coverage", "gdop", "cost")


def categorical_rejection(v: DecisionVector, c: ConstraintParams) -> tuple[str, str] | None:
    """Stage and reason if ``v`` fails a cheap categorical rule, else ``None``."""
    if v.n_sats % v.n_planes:
        return "divisibility", f"{v.n_sats} sats not a multiple of {v.n_planes} planes"
    if v.altitude_km in c.leo_altitudes_km:
        if v.inclination_deg not in c.leo_inclinations_deg:
            return "regime", f"LEO needs inclination in {list(c.leo_inclinations_deg)}"
        if v.n_sats < c.leo_min_sats:
            return "regime", f"LEO needs at least {c.leo_min_sats} sats"
        if v.n_planes not in c.leo_planes:
            return "regime", f"LEO needs planes in {list(c.leo_planes)}"
    else:
        if v.inclination_deg not in c.meo_inclinations_deg:
            return "regime", f"MEO needs inclination in {list(c.meo_inclinations_deg)}"
        if v.n_sats > c.meo_max_sats:
            return "regime", f"MEO allows at most {c.meo_max_sats} sats"
        if v.n_planes not in c.meo_planes:
            return "regime", f"MEO needs planes in {list(c.meo_planes)}"
    return None


@dataclass(frozen=True)
class ConstraintResult:
    feasible: list[DecisionVector]
    rejections: list[tuple[DecisionVector, str, str]]
    stage_counts: dict

    @property
    def n_evaluated(self) -> int:
        return len(self.feasible) + len(self.rejections)


def apply_constraints(
    vectors: Sequence[DecisionVector],
    constraints: ConstraintParams | None = None,
    geometry: Callable[[DecisionVector], GdopField] | None = None,
    total_cost: Callable[[list[DecisionVector]], np.ndarray] | None = None,
    cost_cap_busd: float | None = None,
) -> ConstraintResult:
    """Run the filter stages in order, keeping the reason for every rejection.

    Stages 3-4 need ``geometry`` and stage 5 needs ``total_cost`` (vectorized
    over the survivors, in $B); stages without a service are skipped.
    """
    c = constraints or default_model().constraints
    counts = {s: 0 for s in STAGE_NAMES}
    rejected: list[tuple[DecisionVector, str, str]] = []
    alive: list[DecisionVector] = []
    for v in vectors:
        why = categorical_rejection(v, c)
        if why is None:
            alive.append(v)
        else:
            counts[why[0]] += 1
            rejected.append((v, *why))
    if geometry is not None:
        keep = []
        for v in alive:
            f = geometry(v)
            if f.coverage < 1.0:
                counts["coverage"] += 1
                rejected.append((v, "coverage", f"coverage {f.coverage:.4f} < 1"))
            elif not np.isfinite(f.worst_site) or f.worst_site > c.gdop_cap:
                counts["gdop"] += 1
                rejected.append((v, "gdop", f"worst-site GDOP {f.worst_site:.3f} > {c.gdop_cap}"))
            else:
                keep.append(v)
        alive = keep
    if total_cost is not None and alive:
        cap = cost_cap_busd if cost_cap_busd is not None else default_model().cost.cost_cap_busd
        totals = np.asarray(total_cost(alive))
        keep = []
        for v, t in zip(alive, totals):
            if t > cap:
                counts["cost"] += 1
                rejected.append((v, "cost", f"total cost {t:.2f} $B > {cap}"))
            else:
                keep.append(v)
        alive = keep
    counts["feasible"] = len(alive)
    return ConstraintResult(alive, rejected, counts)


# geometry service -------------------------------------------------------------

def _field_worker(args):
    cfg, geo, orbit = args
    return evaluate_geometry(cfg, build_grid(geo.grid_points), geo, orbit)


class GeometryService:
    """Memoized worst-site GDOP per unique constellation geometry.

    With ``workers > 1`` batches are computed in separate processes; every
    geometry is evaluated by the same deterministic kernel, so results do not
    depend on the worker count.
    """

    def __init__(self, model: ModelParams | None = None, workers: int = 1, cache: GdopCache | None = None):
        self.model = model or default_model()
        self.workers = max(1, int(workers))
        self.cache = cache if cache is not None else GdopCache()
        self._grid: UserGrid | None = None

    @property
    def grid(self) -> UserGrid:
        if self._grid is None:
            self._grid = build_grid(self.model.geometry.grid_points)
        return self._grid

    def walker(self, v: DecisionVector) -> WalkerDelta:
        return v.walker(self.model.orbit.phasing_f % v.n_planes)

    def _key(self, v: DecisionVector):
        return GdopCache.key(self.walker(v), self.model.geometry, self.model.orbit)

    def __call__(self, v: DecisionVector) -> GdopField:
        key = self._key(v)
        hit = self.cache.get(key)
        if hit is None:
            hit = evaluate_geometry(self.walker(v), self.grid, self.model.geometry, self.model.orbit)
            self.cache.put(key, hit)
        return hit

    def prefetch(self, vectors: Iterable[DecisionVector]) -> None:
        """Compute all missing geometries, in sorted order."""
        todo = {}
        for v in vectors:
            key = self._key(v)
            if key not in self.cache and key not in todo:
                todo[key] = self.walker(v)
        keys = sorted(todo)
        if not keys:
            return
        if self.workers == 1 or len(keys) == 1:
            for k in keys:
                self.cache.put(k, evaluate_geometry(todo[k], self.grid, self.model.geometry, self.model.orbit))
            return
        ctx = multiprocessing.get_context("spawn")
        jobs = [(todo[k], self.model.geometry, self.model.orbit) for k in keys]
        with cf.ProcessPoolExecutor(self.workers, mp_context=ctx) as pool:
            for k, f in zip(keys, pool.map(_field_worker, jobs)):
                self.cache.put(k, f)

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            pickle.dump({"version": 1, "items": self.cache.items()}, fh)

    def load(self, path: str | Path) -> int:
        """Merge a cache file written by :meth:`save`; returns entries loaded."""
        p = Path(path)
        if not p.exists():
            return 0
        with open(p, "rb") as fh:
            data = pickle.load(fh)
        if data.get("version") != 1:
            return 0
        for k, f in data["items"]:
            self.cache.put(k, f)
        return len(data["items"])


# evaluation ---------------------------------------------------------------------

def _unique_index(frame: pd.DataFrame, cols: Sequence[str]) -> tuple[np.ndarray, list[tuple]]:
    keys = list(frame[list(cols)].itertuples(index=False, name=None))
    if not keys:
        return np.zeros(0, dtype=np.int64), []
    codes, uniques = pd.factorize(pd.Series(keys, dtype=object), sort=True)
    return codes, list(uniques)


SIGNAL_KEY = ("altitude_km", "rx_power_dbw", "n_freqs")
SIZING_KEY = ("altitude_km", "inclination_deg", "rx_power_dbw", "n_freqs", "lifetime_yr")


class PopulationEvaluator:
    """Evaluate a fixed population under any scenario.

    Geometry is scenario-invariant, so GDOP is supplied once.  Signal and
    sizing results are computed per unique sub-key and broadcast; the cost
    chain is vectorized.
    """

    def __init__(self, decisions: pd.DataFrame, gdop, model: ModelParams | None = None, coverage=None):
        self.model = model or default_model()
        self.decisions = decisions[list(DECISIONS)].reset_index(drop=True).astype(np.int64)
        n = len(self.decisions)
        self.gdop = np.asarray(gdop, float).reshape(n)
        self.coverage = np.ones(n) if coverage is None else np.asarray(coverage, float).reshape(n)
        self._sig_codes, self._sig_keys = _unique_index(self.decisions, SIGNAL_KEY)
        self._size_codes, self._size_keys = _unique_index(self.decisions, SIZING_KEY)
        d = self.decisions
        c = self.model.cost
        self.altitude = d["altitude_km"].to_numpy(float)
        self.n_sats = d["n_sats"].to_numpy(np.int64)
        self.planes = d["n_planes"].to_numpy(np.int64)
        life = d["lifetime_yr"].to_numpy(np.int64)
        self.gens = c.horizon_yr // np.where(life > 0, life, 1)
        if np.any(self.gens * life != c.horizon_yr):
            raise ValueError("cost horizon must be a multiple of every lifetime option")
        self.units = self.n_sats * self.gens
        self.perf = cost_mod.soyuz_performance(self.altitude, c) if n else np.zeros(0)

    def __len__(self) -> int:
        return len(self.decisions)

    def _signal(self, scenario: Scenario):
        m = self.model
        budgets = [uere(SignalConfig(rx, nf, scenario.t_wait_min), h, m.signal, m.geometry)
                   for h, rx, nf in self._sig_keys]
        uere_m = np.array([b.total_rms_m for b in budgets], float)
        tau = np.array([b.decorrelation_min for b in budgets], float)
        return uere_m[self._sig_codes], tau[self._sig_codes]

    def _sizing(self, scenario: Scenario):
        m = self.model
        reports = [size_satellite(h, inc, rx, nf, life, scenario.eol, scenario.dry_mass_delta, m.sizing, m.orbit)
                   for h, inc, rx, nf, life in self._size_keys]
        cols = np.array([[r.power.p_spacecraft_w, r.m_dry_kg, r.m_wet_kg] for r in reports], float)
        cols = cols.reshape(-1, 3)[self._size_codes]
        return cols[:, 0], cols[:, 1], cols[:, 2]

    def _costs(self, scenario: Scenario, dry, wet):
        c = self.model.cost
        unit_cost, extrapolated = cost_mod.bus_unit_cost(dry, c)
        production = unit_cost * np.power(self.units.astype(float), cost_mod.learning_exponent(scenario.learning))
        launch, n_launches = cost_mod.launch_cost_array(wet, self.altitude, self.planes, self.n_sats // self.planes,
                                                        self.gens, -scenario.launch_delta, c)
        operations = scenario.ops_rate * self.n_sats * c.horizon_yr * np.ones(len(self))
        total = (production + launch + operations) / 1000.0
        return total, unit_cost, extrapolated, production, launch, n_launches, operations

    def objectives(self, scenario: Scenario = BASELINE) -> np.ndarray:
        """(n, 2) array of navigation error [m] and total cost [$B]."""
        uere_m, _ = self._signal(scenario)
        _, dry, wet = self._sizing(scenario)
        total = self._costs(scenario, dry, wet)[0]
        return np.column_stack([uere_m * self.gdop, total])

    def evaluate(self, scenario: Scenario = BASELINE) -> pd.DataFrame:
        """One row per architecture: decisions, metrics, then flags and cost detail."""
        uere_m, tau = self._signal(scenario)
        sc_power, dry, wet = self._sizing(scenario)
        total, unit_cost, extrapolated, production, launch, n_launches, operations = self._costs(scenario, dry, wet)
        out = self.decisions.copy()
        out["nav_error_m"] = uere_m * self.gdop
        out["total_cost_busd"] = total
        out["sc_power_w"] = sc_power
        out["dry_mass_kg"] = dry
        out["wet_mass_kg"] = wet
        out["unit_cost_musd"] = unit_cost
        out["launch_cost_musd"] = launch
        out["gdop"] = self.gdop
        out["uere_m"] = uere_m
        out["decorr_time_min"] = tau
        out["pareto_rank"] = np.zeros(len(self), dtype=np.int64)
        out["bus_extrapolated"] = extrapolated
        out["heavy_launch"] = wet > self.perf
        out["production_musd"] = production
        out["operations_musd"] = operations
        out["n_flight_units"] = self.units
        out["n_launches"] = n_launches
        out["coverage"] = self.coverage
        return out


def metrics_frame(
    decisions: pd.DataFrame,
    gdop: np.ndarray,
    scenario: Scenario = BASELINE,
    model: ModelParams | None = None,
    coverage: np.ndarray | None = None,
) -> pd.DataFrame:
    """Evaluate navigation error and cost for every row of ``decisions``."""
    return PopulationEvaluator(decisions, gdop, model, coverage).evaluate(scenario)


def row_to_metrics(row: pd.Series) -> ArchitectureMetrics:
    dv = DecisionVector(*(int(row[d]) for d in DECISIONS))
    kw = {}
    for f in fields(ArchitectureMetrics):
        if f.name == "decision":
            continue
        val = row[f.name]
        if f.name in ("n_flight_units", "n_launches"):
            val = int(val)
        elif f.name in ("bus_extrapolated", "heavy_launch"):
            val = bool(val)
        elif f.name == "pareto_rank":
            val = int(val) if val else None
        else:
            val = float(val)
        kw[f.name] = val
    return ArchitectureMetrics(decision=dv, **kw)


def evaluate(
    vector: DecisionVector,
    scenario: Scenario = BASELINE,
    model: ModelParams | None = None,
    geometry: GeometryService | None = None,
) -> ArchitectureMetrics:
    """All Table-XIII-style metrics for one architecture (no rank)."""
    model = model or default_model()
    geometry = geometry or GeometryService(model)
    f = geometry(vector)
    frame = metrics_frame(decisions_frame([vector]), np.array([f.worst_site]), scenario, model,
                          np.array([f.coverage]))
    return row_to_metrics(frame.iloc[0])


# ranking ------------------------------------------------------------------------

def normalize(values) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant column maps to zeros."""
    x = np.asarray(values, float)
    if x.size == 0:
        return x.copy()
    lo, hi = np.min(x, axis=0), np.max(x, axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (x - lo) / safe, 0.0)


def pareto_rank(objectives) -> np.ndarray:
    """Non-dominated sorting ranks (1 = front) for two minimized objectives.

    Runs in O(n log n): points are visited in lexicographic order and each
    front keeps the smallest second objective seen so far.  Identical points
    share a rank.
    """
    f = np.asarray(objectives, float)
    if f.ndim != 2 or f.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of objectives")
    if not np.all(np.isfinite(f)):
        raise ValueError("objectives must be finite")
    n = len(f)
    ranks = np.zeros(n, dtype=np.int64)
    if n == 0:
        return ranks
    uniq, inverse = np.unique(f, axis=0, return_inverse=True)
    tails: list[float] = []
    urank = np.empty(len(uniq), dtype=np.int64)
    for i, (_, y) in enumerate(uniq):
        k = bisect.bisect_right(tails, y)
        if k == len(tails):
            tails.append(y)
        else:
            tails[k] = y
        urank[i] = k + 1
    return urank[inverse.ravel()]


def pareto_rank_bruteforce(objectives) -> np.ndarray:
    """Reference front peeling for any number of objectives (O(n^2) per front)."""
    f = np.asarray(objectives, float)
    n = len(f)
    ranks = np.zeros(n, dtype=np.int64)
    remaining = np.arange(n)
    r = 0
    while remaining.size:
        r += 1
        sub = f[remaining]
        le = np.all(sub[:, None, :] <= sub[None, :, :], axis=2)
        lt = np.any(sub[:, None, :] < sub[None, :, :], axis=2)
        dominated = np.any(le & lt, axis=0)
        ranks[remaining[~dominated]] = r
        remaining = remaining[dominated]
    return ranks


def fuzzy_front(ranks, k: float = 2) -> np.ndarray:
    """Indices of architectures with rank at most ``k``."""
    return np.flatnonzero(np.asarray(ranks) <= k)


def rank_frame(frame: pd.DataFrame) -> pd.DataFrame:
    out = frame.copy()
    obj = normalize(out[list(OBJECTIVES)].to_numpy(float))
    out["pareto_rank"] = pareto_rank(obj) if len(out) else np.zeros(0, dtype=np.int64)
    return out


# pipeline -----------------------------------------------------------------------

@dataclass(frozen=True)
class TradespaceResult:
    """Outcome of the baseline pipeline.

    ``evaluated`` holds every architecture that passed the geometric stages
    (before the cost guard, with a ``within_cost_cap`` column);
    ``population`` is the feasible, ranked subset.
    """

    n_enumerated: int
    population: pd.DataFrame
    evaluated: pd.DataFrame
    rejections: pd.DataFrame
    stage_counts: dict
    fields: dict
    scenario: Scenario = BASELINE

    def feasible_vectors(self) -> list[DecisionVector]:
        return [DecisionVector(*map(int, r)) for r in self.population[list(DECISIONS)].itertuples(index=False)]


def build_tradespace(
    model: ModelParams | None = None,
    geometry: GeometryService | None = None,
    scenario: Scenario | None = None,
    stages: Sequence[str] = ("enumerate", "constrain", "evaluate", "rank"),
) -> TradespaceResult:
    """Enumerate, constrain, evaluate and rank the baseline tradespace."""
    model = model or default_model()
    geometry = geometry or GeometryService(model)
    scenario = scenario or Scenario.baseline(model)
    vectors = enumerate_full_factorial(model.options)
    index = {v: i for i, v in enumerate(vectors)}
    empty = pd.DataFrame(columns=["arch_id", *DECISIONS])
    if "constrain" not in stages:
        return TradespaceResult(len(vectors), empty, empty, pd.DataFrame(), {"enumerated": len(vectors)}, {},
                                scenario)

    pre = [v for v in vectors if categorical_rejection(v, model.constraints) is None]
    geometry.prefetch(pre)
    fields_used = {v.geometry_key: geometry(v) for v in pre}
    geo_ok = [v for v in pre
              if fields_used[v.geometry_key].coverage == 1.0
              and fields_used[v.geometry_key].worst_site <= model.constraints.gdop_cap]
    evaluator = PopulationEvaluator(
        decisions_frame(geo_ok),
        np.array([fields_used[v.geometry_key].worst_site for v in geo_ok]),
        model,
        np.array([fields_used[v.geometry_key].coverage for v in geo_ok]),
    )
    evaluated = evaluator.evaluate(scenario)
    evaluated.insert(0, "arch_id", [index[v] for v in geo_ok])
    cost_of = dict(zip(geo_ok, evaluated["total_cost_busd"].to_numpy()))

    res = apply_constraints(vectors, model.constraints, geometry,
                            lambda alive: np.array([cost_of[v] for v in alive]), model.cost.cost_cap_busd)
    evaluated["within_cost_cap"] = evaluated["total_cost_busd"].to_numpy() <= model.cost.cost_cap_busd
    rej = decisions_frame([r[0] for r in res.rejections])
    rej.insert(0, "arch_id", [index[r[0]] for r in res.rejections])
    rej["stage"] = [r[1] for r in res.rejections]
    rej["reason"] = [r[2] for r in res.rejections]
    rej = rej.sort_values("arch_id", kind="stable").reset_index(drop=True)
    counts = {"enumerated": len(vectors), **res.stage_counts}

    pop = evaluated[evaluated["within_cost_cap"]].drop(columns="within_cost_cap").reset_index(drop=True)
    if "evaluate" not in stages:
        pop = pop[["arch_id", *DECISIONS]]
    elif "rank" in stages:
        pop = rank_frame(pop)
    return TradespaceResult(len(vectors), pop, evaluated, rej, counts, fields_used, scenario)


def find_rows(population: pd.DataFrame, **decisions) -> pd.DataFrame:
    """Rows of ``population`` matching the given decision values."""
    mask = np.ones(len(population), dtype=bool)
    for k, v in decisions.items():
        mask &= population[k].to_numpy() == v
    return population[mask]


def with_rank(m: ArchitectureMetrics, rank: int) -> ArchitectureMetrics:
    return replace(m, pareto_rank=int(rank))
