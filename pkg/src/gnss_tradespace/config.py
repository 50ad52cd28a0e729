"""Model parameters and run configuration.

All numeric constants of the evaluation chain live in the bundled
``data/baseline.yaml``.  A user configuration file only needs the keys it
changes; it is deep-merged over the bundled values and every override is
recorded in the run manifest.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

STAGES = ("enumerate", "constrain", "evaluate", "rank", "mine", "sobol", "scenarios", "failure")


class ConfigError(ValueError):
    """Invalid configuration value; the message starts with the field path."""


@dataclass(frozen=True)
class DecisionOptions:
    altitude_km: tuple[int, ...]
    n_sats: tuple[int, ...]
    inclination_deg: tuple[int, ...]
    n_planes: tuple[int, ...]
    rx_power_dbw: tuple[int, ...]
    n_freqs: tuple[int, ...]
    lifetime_yr: tuple[int, ...]


@dataclass(frozen=True)
class OrbitParams:
    mu_km3_s2: float
    earth_radius_km: float
    earth_rotation_rad_s: float
    phasing_f: int


@dataclass(frozen=True)
class GeometryParams:
    grid_points: int
    mask_deg: float
    prop_step_deg: float
    dop_step_factor: int
    duration_s: float
    lat_bin_deg: float
    elevation_rate_mode: str
    elevation_rate_mdeg_s: dict


@dataclass(frozen=True)
class SignalParams:
    sisre_m: float
    tropo_m: float
    iono_single_m: float
    iono_multi_m: float
    triple_freq_factor: float
    t_wait_min: float
    multipath_elev_deg: float
    multipath_coeffs: tuple[float, ...]
    code_tracking_mode: str
    code_tracking_table_m: dict
    boltzmann_j_k: float
    antenna_temp_k: float
    noise_figure_db: float
    chip_rate_hz: float
    loop_bandwidth_hz: float
    correlator_spacing_chips: float
    integration_time_s: float
    front_end_bandwidth_hz: float


@dataclass(frozen=True)
class SizingParams:
    link_elevation_deg: float
    polarization_loss_db: float
    excess_loss_db: float
    rx_gain_dbi: float
    tx_gain_dbi: float
    carrier_freqs_hz: tuple[float, ...]
    twta_efficiency: float
    payload_thermal_fraction: float
    bus_power_factor: float
    payload_components: tuple[dict, ...]
    eclipse_efficiency: float
    daylight_efficiency: float
    solar_constant_w_m2: float
    cell_efficiency: float
    inherent_degradation: float
    sun_incidence_deg: float
    array_degradation_per_yr: float
    array_specific_power_w_kg: float
    pcu_kg_per_w: float
    distribution_fraction: float
    battery_dod: float
    battery_transmission_eff: float
    battery_energy_density_wh_kg: float
    thermal_kg_per_w: float
    propulsion_base_kg: float
    propulsion_coeff: float
    isp_s: float
    g0_m_s2: float
    power_mass_coeff: float
    power_mass_exponent: float
    adcs_ref_mass_kg: float
    adcs_propellant_kg_yr: float
    adcs_ref_lifetime_yr: float
    meo_maneuver_m_s: float
    meo_maneuver_interval_days: float
    leo_maneuver_m_s_yr: dict
    graveyard_raise_km: float
    deorbit_perigee_km: float
    ttc_reliability_ref: float
    ttc_lifetime_ref_yr: float
    ttc_fraction: float
    adcs_fraction: float
    structure_fraction: float
    payload_mass_model: str
    payload_fraction: float
    payload_mass_kg: float
    satellite_density_kg_m3: float
    aluminium_density_kg_m3: float
    shield_thickness_mm: dict
    shield_lifetimes_yr: tuple[int, ...]

    @property
    def payload_fixed_power_w(self) -> float:
        return float(sum(c["units"] * c["power_w"] for c in self.payload_components))


@dataclass(frozen=True)
class CostParams:
    horizon_yr: int
    learning_factor: float
    bus_catalog: tuple[dict, ...]
    soyuz_ln_coeff: float
    soyuz_intercept: float
    soyuz_launch_musd: float
    heavy_musd_per_kg: float
    cost_cap_busd: float


@dataclass(frozen=True)
class ConstraintParams:
    gdop_cap: float
    leo_altitudes_km: tuple[int, ...]
    leo_inclinations_deg: tuple[int, ...]
    leo_min_sats: int
    leo_planes: tuple[int, ...]
    meo_inclinations_deg: tuple[int, ...]
    meo_max_sats: int
    meo_planes: tuple[int, ...]


@dataclass(frozen=True)
class ModelParams:
    options: DecisionOptions
    orbit: OrbitParams
    geometry: GeometryParams
    signal: SignalParams
    sizing: SizingParams
    cost: CostParams
    constraints: ConstraintParams
    version: int = 1


@dataclass(frozen=True)
class ScenarioGrid:
    learning_factor: tuple[float, ...] = (0.85, 0.90)
    dry_mass_delta: tuple[float, ...] = (-0.40, -0.20, 0.0, 0.20, 0.40)
    eol_strategy: tuple[str, ...] = ("bau", "deorbit")
    launch_delta: tuple[float, ...] = (-0.80, -0.40, 0.0)
    t_wait_min: tuple[float, ...] = (1.0, 5.0, 10.0)
    ops_musd_per_sat_yr: tuple[float, ...] = (0.0, 2.0, 4.0)


@dataclass(frozen=True)
class RunSettings:
    stages: tuple[str, ...] = STAGES
    scenarios: bool = True
    output_dir: str = "results"
    workers: int = 1
    seed: int = 0
    failure_trials: int = 10
    gdop_cache: str | None = None
    plots: tuple[str, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    run: RunSettings = field(default_factory=RunSettings)
    scenarios: ScenarioGrid = field(default_factory=ScenarioGrid)
    overrides: dict = field(default_factory=dict, compare=False)


def load_baseline() -> dict:
    """Raw bundled model data as a nested dict."""
    text = resources.files("gnss_tradespace.data").joinpath("baseline.yaml").read_text()
    return yaml.safe_load(text)


def deep_merge(base: Mapping, override: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _coerce(value: Any, type_str: str, path: str) -> Any:
    try:
        if type_str == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if type_str == "int":
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if type_str == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if type_str == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if type_str == "dict":
            if not isinstance(value, Mapping):
                raise TypeError
            return dict(value)
        if type_str == "str | None":
            return None if value is None else str(value)
        if type_str.startswith("tuple[dict"):
            if not isinstance(value, (list, tuple)) or not all(isinstance(v, Mapping) for v in value):
                raise TypeError
            return tuple(dict(v) for v in value)
        if type_str.startswith("tuple["):
            item = type_str[len("tuple["):].split(",")[0].strip()
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return tuple(_coerce(v, item, f"{path}[{i}]") for i, v in enumerate(value))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: expected {type_str}, got {value!r}") from None
    return value


def _build(cls, data: Any, path: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path or '<root>'}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{sorted(unknown)[0]}: unknown key")
    kwargs = {}
    for name, f in fields.items():
        sub = f"{path}.{name}" if path else name
        if name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(f"{sub}: missing required value")
            continue
        target = _NESTED.get(f.type)
        kwargs[name] = _build(target, data[name], sub) if target else _coerce(data[name], f.type, sub)
    return cls(**kwargs)


_NESTED = {
    "DecisionOptions": DecisionOptions,
    "OrbitParams": OrbitParams,
    "GeometryParams": GeometryParams,
    "SignalParams": SignalParams,
    "SizingParams": SizingParams,
    "CostParams": CostParams,
    "ConstraintParams": ConstraintParams,
}


def _validate(model: ModelParams) -> None:
    g, s, z = model.geometry, model.signal, model.sizing
    checks = [
        ("model.geometry.grid_points", g.grid_points >= 100, "must be >= 100"),
        ("model.geometry.mask_deg", 0 <= g.mask_deg < 90, "must be in [0, 90)"),
        ("model.geometry.prop_step_deg", g.prop_step_deg > 0, "must be > 0"),
        ("model.geometry.dop_step_factor", g.dop_step_factor >= 1, "must be >= 1"),
        ("model.geometry.elevation_rate_mode", g.elevation_rate_mode in ("table", "recompute"),
         "must be 'table' or 'recompute'"),
        ("model.signal.code_tracking_mode", s.code_tracking_mode in ("table", "formula"),
         "must be 'table' or 'formula'"),
        ("model.sizing.payload_mass_model", z.payload_mass_model in ("fraction", "fixed"),
         "must be 'fraction' or 'fixed'"),
        ("model.sizing.link_elevation_deg", 0 <= z.link_elevation_deg < 90, "must be in [0, 90)"),
        ("model.cost.learning_factor", 0 < model.cost.learning_factor <= 1, "must be in (0, 1]"),
    ]
    for path, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{path}: {msg}")
    for key in ("n_sats", "n_planes", "altitude_km"):
        if not getattr(model.options, key):
            raise ConfigError(f"model.options.{key}: option list must not be empty")


def build_model(overrides: Mapping | None = None) -> ModelParams:
    """Model parameters from the bundled baseline with optional overrides."""
    data = load_baseline()
    if overrides:
        data = deep_merge(data, overrides)
    model = _build(ModelParams, data, "model")
    _validate(model)
    return model


_DEFAULT_MODEL: ModelParams | None = None


def default_model() -> ModelParams:
    """The baseline parameter set (cached)."""
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        _DEFAULT_MODEL = build_model()
    return _DEFAULT_MODEL


def load_run_config(path: str | Path | None = None, extra: Mapping | None = None) -> RunConfig:
    """Read a YAML run configuration.

    The file may contain three top-level sections, all optional:
    ``model`` (overrides of the bundled data), ``run`` and ``scenarios``.
    ``extra`` is merged last (command-line flags).
    """
    raw: dict = {}
    if path is not None:
        text = Path(path).read_text()
        raw = yaml.safe_load(text) or {}
        if not isinstance(raw, Mapping):
            raise ConfigError("<root>: expected a mapping")
    if extra:
        raw = deep_merge(raw, extra)
    unknown = set(raw) - {"model", "run", "scenarios"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown top-level section")
    model = build_model(raw.get("model"))
    run = _build(RunSettings, raw.get("run", {}), "run")
    bad = [s for s in run.stages if s not in STAGES]
    if bad:
        raise ConfigError(f"run.stages: unknown stage {bad[0]!r}; choose from {', '.join(STAGES)}")
    grid = _build(ScenarioGrid, raw.get("scenarios", {}), "scenarios")
    return RunConfig(model=model, run=run, scenarios=grid, overrides=raw)


def to_plain(obj: Any) -> Any:
    """JSON-friendly view of a config dataclass (dict keys become strings)."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    return obj
