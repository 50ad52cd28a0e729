"""Vector plots of the tradespace results.

Every function writes one SVG and returns its path.  Inputs are plain data
frames, so the plots can be regenerated from the CSV outputs.  Empty inputs
raise :class:`EmptyPlotData` instead of writing a blank figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .tradespace import REGIMES, orbit_regime  # noqa: E402

PLOT_KINDS = ("tradespace", "latitude", "failure", "shares")

# fixed hash salt and no date stamp keep the SVG bytes reproducible
_RC = {"svg.hashsalt": "gnss-tradespace", "svg.fonttype": "none"}
_META = {"Date": None, "Creator": None}


class EmptyPlotData(ValueError):
    """Raised when a plot has nothing to show."""


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_tradespace(population: pd.DataFrame, path, references: pd.DataFrame | None = None) -> Path:
    """Cost against navigation error, one panel per orbit regime, front in red."""
    if population is None or len(population) == 0:
        raise EmptyPlotData("tradespace plot: the feasible set is empty")
    regime = orbit_regime(population["altitude_km"].to_numpy())
    front = population["pareto_rank"].to_numpy() == 1
    x_all = population["nav_error_m"].to_numpy(float)
    y_all = population["total_cost_busd"].to_numpy(float)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 2, figsize=(10, 8), sharex=True, sharey=True)
        for ax, g in zip(axes.ravel(), REGIMES):
            sel = regime == g
            ax.scatter(x_all, y_all, s=4, c="0.85", lw=0)
            ax.scatter(x_all[sel & ~front], y_all[sel & ~front], s=6, c="tab:blue", lw=0, label=g)
            ax.scatter(x_all[front], y_all[front], s=14, c="tab:red", lw=0, label="Pareto front")
            if references is not None and len(references):
                ax.scatter(references["nav_error_m"], references["total_cost_busd"], s=30, c="k", marker="x",
                           label="reference")
            ax.set_title(g)
            ax.set_yscale("log")
            ax.legend(fontsize=7, loc="upper right")
        for ax in axes[1]:
            ax.set_xlabel("navigation error [m]")
        for ax in axes[:, 0]:
            ax.set_ylabel("total cost [$B]")
        fig.tight_layout()
        return _save(fig, path)


def plot_latitude_profiles(profiles: pd.DataFrame, path) -> Path:
    """Worst time-averaged GDOP against latitude; one column per constellation."""
    if profiles is None or len(profiles) == 0 or profiles.shape[1] < 2:
        raise EmptyPlotData("latitude plot: no GDOP profiles")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        lat = profiles["lat_deg"].to_numpy(float)
        for col in profiles.columns:
            if col != "lat_deg":
                ax.plot(lat, profiles[col].to_numpy(float), marker=".", label=col)
        ax.set_xlabel("latitude [deg]")
        ax.set_ylabel("max of average GDOP")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def plot_failure(profiles: dict[str, pd.DataFrame], path) -> Path:
    """Intact (dots) and single-failure (crosses) latitude profiles."""
    profiles = {k: v for k, v in (profiles or {}).items() if len(v)}
    if not profiles:
        raise EmptyPlotData("failure plot: no failure-study results")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for i, (label, df) in enumerate(profiles.items()):
            c = colors[i % len(colors)]
            lat = df["lat_deg"].to_numpy(float)
            ax.plot(lat, df["intact"].to_numpy(float), ".-", color=c, label=f"{label} intact")
            trials = [col for col in df.columns if col.startswith("trial_")]
            if trials:
                worst = df[trials].to_numpy(float)
                ax.plot(lat, np.nanmean(worst, axis=1), "x--", color=c, label=f"{label} one failure")
        ax.set_xlabel("latitude [deg]")
        ax.set_ylabel("max of average GDOP")
        ax.legend(fontsize=7)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def plot_regime_shares(shares: pd.DataFrame, knob: str, path) -> Path:
    """Grouped bars of fuzzy-front composition by regime against one knob."""
    if shares is None or len(shares) == 0:
        raise EmptyPlotData(f"share plot ({knob}): no scenario rows")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        levels = [str(v) for v in shares[knob]]
        x = np.arange(len(levels))
        w = 0.8 / len(REGIMES)
        for i, g in enumerate(REGIMES):
            ax.bar(x + (i - 1.5) * w, shares[g].to_numpy(float), w, label=g)
        ax.set_xticks(x, levels)
        ax.set_xlabel(knob)
        ax.set_ylabel("share of fuzzy front [%]")
        ax.legend(fontsize=8)
        fig.tight_layout()
        return _save(fig, path)
