import json
import shutil
import subprocess
import sys

import pandas as pd
import pytest

from gnss_tradespace import cli
from gnss_tradespace.cli import main, resolve_stages
from gnss_tradespace.config import STAGES


def test_resolve_stages_adds_prerequisites_in_order():
    assert resolve_stages(["rank"]) == ("enumerate", "constrain", "evaluate", "rank")
    assert resolve_stages(["enumerate"]) == ("enumerate",)
    assert resolve_stages(STAGES) == tuple(STAGES)
    assert resolve_stages(["mine", "enumerate"])[0] == "enumerate"


def test_enumerate_only(tmp_path, capsys):
    assert main(["--stage", "enumerate", "--out", str(tmp_path)]) == 0
    assert "44226" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "run-manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["stages"] == ["enumerate"]
    assert manifest["stage_counts"] == {"enumerated": 44226}


@pytest.mark.parametrize("argv, message", [
    (["--stage", "fly"], "unknown stage 'fly'"),
    (["--grid-points", "5"], "grid_points"),
    (["--plot", "pie"], "unknown plot 'pie'"),
    (["--config", "/nonexistent/run.yaml"], "No such file"),
])
def test_configuration_errors_exit_2(tmp_path, capsys, argv, message):
    assert main([*argv, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and message in err


def test_module_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "gnss_tradespace", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("gnss-tradespace ")


def _full_run(out, cache, workers):
    own = out.parent / f"{out.name}.pkl"
    shutil.copy(cache, own)
    rc = main(["--out", str(out), "--gdop-cache", str(own), "--workers", str(workers), "--failure-trials", "2",
               "--plot", "tradespace,latitude,failure,shares"])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def two_runs(gdop_cache_file, tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    return _full_run(base / "w1", gdop_cache_file, 1), _full_run(base / "w2", gdop_cache_file, 2)


def test_full_run_writes_every_output(two_runs, tradespace):
    out = two_runs[0]
    manifest = json.loads((out / "run-manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["failed_stage"] is None
    assert manifest["stages"] == list(STAGES)
    for name in ("rejections.csv", "architectures.csv", "evaluated.csv", "pareto.json", "rules.json", "sobol.json",
                 "scenarios.csv", "scenario_shares.csv", "failure.json", "failure_profiles.csv",
                 "tradespace.svg", "latitude.svg", "failure.svg", "shares_ops_rate.svg"):
        assert (out / name).exists(), name
        assert name in manifest["outputs"]
    assert not (out / "FAILED").exists()
    arch = pd.read_csv(out / "architectures.csv")
    assert len(arch) == manifest["stage_counts"]["feasible"] == len(tradespace.population)
    counts = dict(manifest["stage_counts"])
    assert sum(counts.values()) - counts.pop("enumerated") == 44226
    assert len(pd.read_csv(out / "rejections.csv")) == 44226 - len(arch)
    pareto = json.loads((out / "pareto.json").read_text())
    assert len(pareto["front"]) == int((arch["pareto_rank"] == 1).sum())
    assert len(pd.read_csv(out / "scenario_shares.csv")) == 540


def test_outputs_independent_of_workers(two_runs):
    a, b = two_runs
    names = sorted(p.name for p in a.iterdir() if p.name != "run-manifest.json")
    assert names == sorted(p.name for p in b.iterdir() if p.name != "run-manifest.json")
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    ma, mb = (json.loads((d / "run-manifest.json").read_text()) for d in (a, b))
    for m in (ma, mb):
        m.pop("run"), m.pop("overrides")
    assert ma == mb


def test_stage_failure_keeps_partial_outputs(tmp_path, gdop_cache_file, monkeypatch, capsys):
    def boom(self):
        raise RuntimeError("ranking exploded")

    monkeypatch.setattr(cli.Pipeline, "stage_rank", boom)
    cache = tmp_path / "c.pkl"
    shutil.copy(gdop_cache_file, cache)
    rc = main(["--stage", "mine", "--out", str(tmp_path / "o"), "--gdop-cache", str(cache)])
    assert rc == 1
    out = tmp_path / "o"
    assert "stage rank failed" in capsys.readouterr().err
    marker = (out / "FAILED").read_text()
    assert marker.startswith("stage: rank") and "ranking exploded" in marker
    manifest = json.loads((out / "run-manifest.json").read_text())
    assert manifest["status"] == "failed" and manifest["failed_stage"] == "rank"
    assert (out / "architectures.csv").exists() and not (out / "rules.json").exists()
    # a later successful run clears the marker
    assert main(["--stage", "enumerate", "--out", str(out)]) == 0
    assert not (out / "FAILED").exists()
