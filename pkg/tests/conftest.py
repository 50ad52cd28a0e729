"""Shared fixtures.

The baseline tradespace is built once per session on the default 4,000-point
grid (a couple of minutes).  Set ``GNSS_TRADESPACE_GDOP_CACHE`` to a file path
to reuse computed geometries between runs.
"""

from __future__ import annotations

import os

import pytest

from gnss_tradespace.analytics.scenarios import scenario_sweep
from gnss_tradespace.config import default_model
from gnss_tradespace.tradespace import GeometryService, build_tradespace

CACHE_ENV = "GNSS_TRADESPACE_GDOP_CACHE"
_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def geometry(model):
    g = GeometryService(model)
    path = os.environ.get(CACHE_ENV)
    if path:
        g.load(path)
    return g


@pytest.fixture(scope="session")
def tradespace(model, geometry):
    res = build_tradespace(model, geometry)
    path = os.environ.get(CACHE_ENV)
    if path:
        geometry.save(path)
    return res


@pytest.fixture(scope="session")
def population(tradespace):
    return tradespace.population


@pytest.fixture(scope="session")
def sweep(population, model):
    return scenario_sweep(population, model=model)


@pytest.fixture(scope="session")
def gdop_cache_file(tradespace, geometry, tmp_path_factory):
    """The session's computed geometries, saved for CLI runs."""
    path = tmp_path_factory.mktemp("gdop") / "gdop.pkl"
    geometry.save(path)
    return path


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, checks: list[tuple[str, bool, str]]) -> None:
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name} [{'ok' if good else 'FAIL'}: {value}]" for name, good, value in checks)
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines[number] = line
        print(line)
        failed = [c for c in checks if not c[1]]
        assert not failed, "; ".join(f"{n}: {v}" for n, _, v in failed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
