"""Command-line pipeline: enumerate, constrain, evaluate, rank, then analyze.

Example::

    gnss-tradespace --out results --plot tradespace,shares
    gnss-tradespace --stage enumerate
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .analytics.failure import failure_study
from .analytics.mining import mine_rules, table_xiv_targets
from .analytics.scenarios import enumerate_scenarios, one_at_a_time, robustness_table, scenario_sweep
from .analytics.sensitivity import sensitivity_report
from .config import STAGES, ConfigError, RunConfig, load_run_config, to_plain
from .tradespace import (
    DECISIONS, EXTRA_COLUMNS, METRIC_COLUMNS, REFERENCE_ARCHITECTURES, DecisionVector, GeometryService,
    Scenario, build_tradespace, find_rows, orbit_regime,
)

log = logging.getLogger("gnss_tradespace")

# stage -> stages it needs
PREREQUISITES = {
    "enumerate": (),
    "constrain": ("enumerate",),
    "evaluate": ("constrain",),
    "rank": ("evaluate",),
    "mine": ("rank",),
    "sobol": ("evaluate",),
    "scenarios": ("evaluate",),
    "failure": (),
}
PLOT_STAGE = {"tradespace": "rank", "latitude": "constrain", "failure": "failure", "shares": "scenarios"}
SHARE_KNOBS = ("ops_rate", "dry_mass_delta", "t_wait_min", "launch_delta", "learning", "eol")
ARCH_COLUMNS = ("arch_id", *DECISIONS, "regime", *METRIC_COLUMNS, *EXTRA_COLUMNS)
FAILURE_MARKER = "FAILED"


class StageError(RuntimeError):
    """A stage could not run with the inputs available."""


def resolve_stages(requested) -> tuple[str, ...]:
    """Requested stages plus their prerequisites, in pipeline order."""
    need = set()
    todo = list(requested)
    while todo:
        s = todo.pop()
        if s not in PREREQUISITES:
            raise ConfigError(f"run.stages: unknown stage {s!r}; choose from {', '.join(STAGES)}")
        if s not in need:
            need.add(s)
            todo.extend(PREREQUISITES[s])
    return tuple(s for s in STAGES if s in need)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, default=_json_default, allow_nan=False) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def architectures_table(population: pd.DataFrame) -> pd.DataFrame:
    """Fixed column order: id, decisions, regime, metrics, then rank and flags."""
    out = population.copy()
    out["regime"] = orbit_regime(out["altitude_km"].to_numpy()) if len(out) else []
    for c in ARCH_COLUMNS:
        if c not in out:
            out[c] = np.nan
    return out[list(ARCH_COLUMNS)]


def pareto_document(population: pd.DataFrame) -> dict:
    front = population[population["pareto_rank"] == 1].sort_values(["nav_error_m", "arch_id"], kind="stable")
    refs = {}
    for name, v in REFERENCE_ARCHITECTURES.items():
        row = find_rows(population, **dict(zip(DECISIONS, v.as_tuple())))
        refs[name] = None if row.empty else {"arch_id": int(row["arch_id"].iloc[0]),
                                             "pareto_rank": int(row["pareto_rank"].iloc[0])}
    return {
        "n_feasible": int(len(population)),
        "n_front": int(len(front)),
        "references": refs,
        "front": architectures_table(front).to_dict(orient="records"),
    }


def rules_document(population: pd.DataFrame) -> dict:
    doc = {}
    for block, (pop, target) in table_xiv_targets(population).items():
        rules = mine_rules(pop, target, name=block) if target.any() else []
        doc[block] = {"n": int(len(pop)), "n_target": int(target.sum()), "rules": [r.as_dict() for r in rules]}
    return doc


class Pipeline:
    """Runs the selected stages and writes their outputs into ``out``."""

    def __init__(self, cfg: RunConfig, out: Path, stages, plots=()):
        self.cfg = cfg
        self.out = out
        self.stages = stages
        self.plots = tuple(plots)
        self.model = cfg.model
        self.geometry = GeometryService(self.model, cfg.run.workers)
        self.result = None
        self.sweep = None
        self.shares = None
        self.failures = None
        self.counts: dict = {}
        self.outputs: list[str] = []

    def _emit(self, path: Path) -> None:
        self.outputs.append(path.name)
        log.info("wrote %s", path)

    # stages ---------------------------------------------------------------

    def run_stage(self, name: str) -> None:
        getattr(self, f"stage_{name}")()

    def stage_enumerate(self):
        res = build_tradespace(self.model, self.geometry, stages=("enumerate",))
        self.counts["enumerated"] = res.n_enumerated
        print(f"enumerate: {res.n_enumerated} architectures")

    def stage_constrain(self):
        cache = self.cfg.run.gdop_cache
        if cache:
            n = self.geometry.load(cache)
            log.info("loaded %d cached geometries from %s", n, cache)
        self.result = build_tradespace(self.model, self.geometry, stages=self.stages)
        if cache:
            self.geometry.save(cache)
        self.counts = dict(self.result.stage_counts)
        self._emit(write_csv(self.out / "rejections.csv", self.result.rejections))
        print("constrain: " + ", ".join(f"{k}={v}" for k, v in self.counts.items()))

    def stage_evaluate(self):
        self._emit(write_csv(self.out / "architectures.csv", architectures_table(self.result.population)))
        ev = self.result.evaluated
        self._emit(write_csv(self.out / "evaluated.csv", architectures_table(ev).assign(
            within_cost_cap=ev["within_cost_cap"].to_numpy())))
        print(f"evaluate: {len(self.result.population)} feasible architectures")

    def stage_rank(self):
        doc = pareto_document(self.result.population)
        self._emit(write_json(self.out / "pareto.json", doc))
        print(f"rank: {doc['n_front']} non-dominated architectures")

    def stage_mine(self):
        doc = rules_document(self.result.population)
        self._emit(write_json(self.out / "rules.json", doc))
        print("mine: " + ", ".join(f"{k}={len(v['rules'])} rules" for k, v in doc.items()))

    def stage_sobol(self):
        pop = self.result.evaluated
        if len(pop) < 2:
            raise StageError("sobol: fewer than two evaluated architectures")
        self._emit(write_json(self.out / "sobol.json", sensitivity_report(pop).as_dict()))
        print(f"sobol: indices over {len(pop)} architectures")

    def stage_scenarios(self):
        pop = self.result.population
        if len(pop) == 0:
            raise StageError("scenarios: the feasible set is empty")
        scenarios = enumerate_scenarios(self.cfg.scenarios)
        self.sweep = scenario_sweep(pop, scenarios=scenarios, model=self.model, workers=self.cfg.run.workers)
        self._emit(write_csv(self.out / "scenarios.csv", robustness_table(pop, self.sweep)))
        self.shares = self.sweep.regime_shares()
        self._emit(write_csv(self.out / "scenario_shares.csv", self.shares))
        print(f"scenarios: {self.sweep.n_scenarios} scenarios")

    def stage_failure(self):
        reports = failure_study(n_trials=self.cfg.run.failure_trials, seed=self.cfg.run.seed, model=self.model,
                                grid=self.geometry.grid)
        self.failures = reports
        self._emit(write_json(self.out / "failure.json", [r.summary() for r in reports]))
        long = pd.concat([r.latitude_profiles().assign(constellation=r.label) for r in reports], ignore_index=True)
        cols = ["constellation", "lat_deg", "intact", *[c for c in long.columns if c.startswith("trial_")]]
        self._emit(write_csv(self.out / "failure_profiles.csv", long[cols]))
        print("failure: " + ", ".join(f"{r.label} max delta {r.stats.max_delta:.4f}" for r in reports))

    # plots ----------------------------------------------------------------

    def plot(self, kind: str) -> None:
        from . import plots

        stage = PLOT_STAGE[kind]
        if stage not in self.stages:
            raise StageError(f"plot {kind!r} needs stage {stage!r}, which was not run")
        try:
            if kind == "tradespace":
                pop = self.result.population
                refs = pd.concat([find_rows(pop, **dict(zip(DECISIONS, v.as_tuple())))
                                  for v in REFERENCE_ARCHITECTURES.values()])
                self._emit(plots.plot_tradespace(pop, self.out / "tradespace.svg", refs))
            elif kind == "latitude":
                table = self.latitude_table()
                self._emit(write_csv(self.out / "latitude_profiles.csv", table))
                self._emit(plots.plot_latitude_profiles(table, self.out / "latitude.svg"))
            elif kind == "failure":
                prof = {r.label: r.latitude_profiles() for r in self.failures}
                self._emit(plots.plot_failure(prof, self.out / "failure.svg"))
            elif kind == "shares":
                for knob in SHARE_KNOBS:
                    base = Scenario.baseline(self.model)
                    rows = one_at_a_time(self.shares, knob, base)
                    self._emit(plots.plot_regime_shares(rows, knob, self.out / f"shares_{knob}.svg"))
        except plots.EmptyPlotData as exc:
            print(f"warning: {exc}; no plot written", file=sys.stderr)

    def latitude_table(self) -> pd.DataFrame:
        """Per-latitude worst GDOP for the references and the most accurate front member."""
        picks = dict(REFERENCE_ARCHITECTURES)
        pop = self.result.population
        if "pareto_rank" in pop and len(pop):
            best = pop[pop["pareto_rank"] == 1].sort_values("nav_error_m", kind="stable").head(1)
            for _, row in best.iterrows():
                v = DecisionVector(*(int(row[d]) for d in DECISIONS))
                picks[f"{v.altitude_km} km {v.n_sats}/{v.n_planes} @{v.inclination_deg}"] = v
        cols = {}
        for label, v in picks.items():
            f = self.geometry(v)
            cols[label] = f.per_latitude_worst
        lats = sorted(set().union(*[c.keys() for c in cols.values()]))
        return pd.DataFrame({"lat_deg": lats, **{k: [c.get(b, np.nan) for b in lats] for k, c in cols.items()}})

    # manifest -------------------------------------------------------------

    def manifest(self, status: str, failed_stage: str | None = None, error: str | None = None) -> dict:
        return {
            "tool": "gnss-tradespace",
            "version": __version__,
            "status": status,
            "failed_stage": failed_stage,
            "error": error,
            "stages": list(self.stages),
            "plots": list(self.plots),
            "stage_counts": self.counts,
            "outputs": sorted(set(self.outputs)),
            "overrides": self.cfg.overrides,
            "run": to_plain(self.cfg.run),
            "scenario_grid": to_plain(self.cfg.scenarios),
            "model": to_plain(self.model),
        }

    def execute(self) -> int:
        marker = self.out / FAILURE_MARKER
        if marker.exists():
            marker.unlink()
        current = None
        try:
            for current in self.stages:
                log.info("stage %s", current)
                self.run_stage(current)
            for kind in self.plots:
                current = f"plot:{kind}"
                self.plot(kind)
        except Exception as exc:  # noqa: BLE001 - any stage failure ends the run
            msg = f"{type(exc).__name__}: {exc}"
            marker.write_text(f"stage: {current}\n{msg}\n\n{traceback.format_exc()}", encoding="utf-8")
            write_json(self.out / "run-manifest.json", self.manifest("failed", current, msg))
            print(f"error: stage {current} failed: {msg}", file=sys.stderr)
            return 1
        write_json(self.out / "run-manifest.json", self.manifest("complete"))
        return 0


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gnss-tradespace", description="GNSS space-segment tradespace exploration.")
    p.add_argument("--config", metavar="PATH", help="YAML run configuration (model overrides, run, scenarios)")
    p.add_argument("--stage", metavar="NAME[,NAME]", action="append", type=_csv_list,
                   help=f"stages to run (prerequisites are added); choices: {', '.join(STAGES)}")
    p.add_argument("--grid-points", type=int, metavar="N", help="number of user grid points")
    p.add_argument("--scenarios", choices=("on", "off"), help="run the scenario sweep")
    p.add_argument("--seed", type=int, metavar="N", help="seed for the failure study")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--plot", metavar="KIND", action="append", type=_csv_list,
                   help="plots to write: tradespace, latitude, failure, shares")
    p.add_argument("--workers", type=int, metavar="N", help="parallel workers")
    p.add_argument("--gdop-cache", metavar="PATH", help="file to load and save computed geometries")
    p.add_argument("--failure-trials", type=int, metavar="N", help="random failures per constellation")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _flag_overrides(args) -> dict:
    run = {}
    if args.stage:
        run["stages"] = [s for group in args.stage for s in group]
    if args.scenarios:
        run["scenarios"] = args.scenarios == "on"
    for flag, key in (("seed", "seed"), ("out", "output_dir"), ("workers", "workers"),
                      ("gdop_cache", "gdop_cache"), ("failure_trials", "failure_trials")):
        if getattr(args, flag) is not None:
            run[key] = getattr(args, flag)
    if args.plot:
        run["plots"] = [k for group in args.plot for k in group]
    extra = {"run": run} if run else {}
    if args.grid_points is not None:
        extra["model"] = {"geometry": {"grid_points": args.grid_points}}
    return extra


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_run_config(args.config, _flag_overrides(args))
        stages = resolve_stages(cfg.run.stages)
        if not cfg.run.scenarios:
            stages = tuple(s for s in stages if s != "scenarios")
        from .plots import PLOT_KINDS

        bad = [k for k in cfg.run.plots if k not in PLOT_KINDS]
        if bad:
            raise ConfigError(f"run.plots: unknown plot {bad[0]!r}; choose from {', '.join(PLOT_KINDS)}")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return Pipeline(cfg, out, stages, cfg.run.plots).execute()


if __name__ == "__main__":
    sys.exit(main())
