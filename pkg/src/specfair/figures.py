"""Report figures rendered from traces to PNG files (headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulation import ma_smooth

MA_WINDOW = 10

__all__ = [
    "MA_WINDOW",
    "plot_goodput_tracking",
    "plot_time_breakdown",
    "plot_utility_convergence",
    "render_run_figures",
    "render_compare_figures",
]


def plot_goodput_tracking(trace, scheduler: str, path) -> None:
    """Per-client smoothed estimate vs moving-average realized goodput."""
    n = len(trace[0].realized)
    ts = np.arange(len(trace))
    fig, ax = plt.subplots(figsize=(9, 4.8))
    for i in range(n):
        realized = np.array([r.realized[i] for r in trace])
        means, stds = ma_smooth(realized, MA_WINDOW)
        estimate = np.array([r.goodput_hat[i] for r in trace])
        (line,) = ax.plot(ts, means, lw=0.8, alpha=0.7)
        ax.fill_between(ts, means - stds, means + stds, alpha=0.12, color=line.get_color())
        ax.plot(
            ts,
            estimate,
            lw=1.5,
            ls="--",
            color=line.get_color(),
            label=f"client {i}",
        )
    ax.set_xlabel("round")
    ax.set_ylabel("goodput (tokens/round)")
    ax.set_title(f"Estimated (dashed) vs realized (MA{MA_WINDOW}) goodput, {scheduler}")
    ax.legend(fontsize=7, ncol=2, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_time_breakdown(summaries: dict, path) -> None:
    """Stacked cumulative receive/verify/send time per scheduler."""
    names = list(summaries)
    receive = np.array([summaries[k]["time_ms"]["receive"] for k in names]) / 1e3
    verify = np.array([summaries[k]["time_ms"]["verify"] for k in names]) / 1e3
    send = np.array([summaries[k]["time_ms"]["send"] for k in names]) / 1e3
    fig, ax = plt.subplots(figsize=(7, 3.6))
    ax.barh(names, receive, label="receive")
    ax.barh(names, verify, left=receive, label="verify")
    ax.barh(names, send, left=receive + verify, label="send")
    for y, total in enumerate(receive + verify + send):
        ax.text(total, y, f" {total:.1f}s", va="center", fontsize=8)
    ax.set_xlabel("modeled wall time (s)")
    ax.set_title("Round-time decomposition")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_utility_convergence(traces: dict, oracle_utility: float | None, path) -> None:
    """Utility of the running-average goodput per scheduler, with the optimum."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for scheduler, trace in traces.items():
        values = [r.utility_running_avg for r in trace]
        ax.plot(np.arange(len(trace)), values, lw=1.4, label=scheduler)
    if oracle_utility is not None:
        ax.axhline(oracle_utility, color="black", ls=":", lw=1.2, label="optimum")
    ax.set_xlabel("round")
    ax.set_ylabel("utility of running-average goodput")
    ax.set_title("Utility convergence")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_run_figures(trace, config, scheduler: str, outdir, oracle_utility=None) -> list[Path]:
    """All figures for a single run; returns the written paths."""
    outdir = Path(outdir)
    stem = f"{config.scenario}_{scheduler}"
    paths = []
    goodput_path = outdir / f"{stem}_goodput.png"
    plot_goodput_tracking(trace, scheduler, goodput_path)
    paths.append(goodput_path)
    utility_path = outdir / f"{stem}_utility.png"
    plot_utility_convergence({scheduler: trace}, oracle_utility, utility_path)
    paths.append(utility_path)
    return paths


def render_compare_figures(traces: dict, report, config, outdir) -> list[Path]:
    """Comparison figures: utility curves, time bars, per-scheduler tracking."""
    outdir = Path(outdir)
    paths = []
    utility_path = outdir / f"{config.scenario}_utility.png"
    plot_utility_convergence(traces, report.oracle_utility, utility_path)
    paths.append(utility_path)
    time_path = outdir / f"{config.scenario}_time.png"
    plot_time_breakdown({k: v for k, v in report.runs.items() if v["rounds"]}, time_path)
    paths.append(time_path)
    for scheduler, trace in traces.items():
        goodput_path = outdir / f"{config.scenario}_{scheduler}_goodput.png"
        plot_goodput_tracking(trace, scheduler, goodput_path)
        paths.append(goodput_path)
    return paths
