"""Trace serialization (CSV/JSONL), run summaries, and scheduler comparison.

CSV files start with ``#``-prefixed header lines carrying a build identifier
and the full resolved config; everything after those lines is the body, which
is byte-reproducible for a given config and seed. Floats are written with 9
significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .config import ExperimentConfig
from .oracle import FWSolution, RegionSpec, solve_fw
from .profiles import long_run_alphas
from .simulation import RoundRecord, empirical_average

__all__ = [
    "fmt9",
    "trace_columns",
    "write_trace_csv",
    "write_trace_jsonl",
    "write_sweep_csv",
    "summarize_run",
    "ComparisonReport",
    "build_comparison",
    "write_comparison_csv",
    "oracle_for_config",
]


def fmt9(value: float) -> str:
    """Format a float with 9 significant digits."""
    return format(value, ".9g")


def _header_lines(config: ExperimentConfig, note: str) -> list[str]:
    from . import __version__

    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return [
        f"# specfair {note} v1",
        f"# build: specfair {__version__} {stamp}",
        f"# config: {json.dumps(config.resolved(), sort_keys=True, separators=(',', ':'))}",
    ]


def trace_columns(clients: int) -> list[str]:
    cols = ["t"]
    for stem in ("x", "X", "alpha_hat", "slots", "accepted"):
        cols += [f"{stem}_{i}" for i in range(clients)]
    cols += [
        "U_smoothed",
        "U_running_avg",
        "receive_ms",
        "verify_ms",
        "send_ms",
        "total_ms",
        "scheduler",
        "seed",
    ]
    return cols


def _trace_row(record: RoundRecord, scheduler: str, seed: int) -> str:
    parts = [str(record.round_index)]
    parts += [fmt9(v) for v in record.realized]
    parts += [fmt9(v) for v in record.goodput_hat]
    parts += [fmt9(v) for v in record.alpha_hat]
    parts += [str(v) for v in record.slots]
    parts += [str(v) for v in record.accepted]
    parts += [
        fmt9(record.utility_smoothed),
        fmt9(record.utility_running_avg),
        fmt9(record.receive_ms),
        fmt9(record.verify_ms),
        fmt9(record.send_ms),
        fmt9(record.total_ms),
        scheduler,
        str(seed),
    ]
    return ",".join(parts)


def write_trace_csv(path, trace, config: ExperimentConfig, scheduler: str) -> None:
    lines = _header_lines(config, "trace")
    lines.append(",".join(trace_columns(config.clients)))
    for record in trace:
        lines.append(_trace_row(record, scheduler, config.seed))
    Path(path).write_text("\n".join(lines) + "\n")


def _record_payload(record: RoundRecord, scheduler: str, seed: int) -> dict:
    r9 = lambda v: float(fmt9(v))
    return {
        "t": record.round_index,
        "x": [r9(v) for v in record.realized],
        "X": [r9(v) for v in record.goodput_hat],
        "alpha_hat": [r9(v) for v in record.alpha_hat],
        "slots": list(record.slots),
        "accepted": list(record.accepted),
        "next_slots": list(record.next_slots),
        "U_smoothed": r9(record.utility_smoothed),
        "U_running_avg": r9(record.utility_running_avg),
        "receive_ms": r9(record.receive_ms),
        "verify_ms": r9(record.verify_ms),
        "send_ms": r9(record.send_ms),
        "total_ms": r9(record.total_ms),
        "scheduler": scheduler,
        "seed": seed,
    }


def write_trace_jsonl(path, trace, config: ExperimentConfig, scheduler: str) -> None:
    from . import __version__

    meta = {
        "meta": {
            "schema": "specfair-trace-v1",
            "build": f"specfair {__version__}",
            "scheduler": scheduler,
            "config": config.resolved(),
        }
    }
    lines = [json.dumps(meta, sort_keys=True)]
    for record in trace:
        lines.append(json.dumps(_record_payload(record, scheduler, config.seed), sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_csv(path, blocks, config: ExperimentConfig) -> None:
    """Long-format trace: one block per swept value, keyed by leading columns.

    ``blocks`` is a list of (param, value, scheduler, config, trace) tuples.
    """
    lines = _header_lines(config, "sweep")
    if blocks:
        lines.append(
            ",".join(["swept_param", "swept_value"] + trace_columns(blocks[0][3].clients))
        )
    for param, value, scheduler, block_config, trace in blocks:
        for record in trace:
            lines.append(
                f"{param},{value},"
                + _trace_row(record, scheduler, block_config.seed)
            )
    Path(path).write_text("\n".join(lines) + "\n")


def summarize_run(trace, config: ExperimentConfig, scheduler: str) -> dict:
    """Summary metrics for one run; null metrics when the trace is empty."""
    if not trace:
        return {
            "scheduler": scheduler,
            "rounds": 0,
            "utility_running_avg": None,
            "utility_smoothed": None,
            "mean_goodput": None,
            "mean_alpha_hat": None,
            "zero_slot_rounds": None,
            "time_ms": None,
            "time_fractions": None,
        }
    n = config.clients
    last = trace[-1]
    xbar = empirical_average(trace, len(trace))
    receive = sum(r.receive_ms for r in trace)
    verify = sum(r.verify_ms for r in trace)
    send = sum(r.send_ms for r in trace)
    total = receive + verify + send
    zero_rounds = [sum(1 for r in trace if r.slots[i] == 0) for i in range(n)]
    return {
        "scheduler": scheduler,
        "rounds": len(trace),
        "utility_running_avg": last.utility_running_avg,
        "utility_smoothed": last.utility_smoothed,
        "mean_goodput": [float(v) for v in xbar.values],
        "mean_alpha_hat": [float(v) for v in last.alpha_hat],
        "zero_slot_rounds": zero_rounds,
        "time_ms": {"receive": receive, "verify": verify, "send": send, "total": total},
        "time_fractions": {
            "receive": receive / total,
            "verify": verify / total,
            "send": send / total,
        },
    }


def oracle_for_config(config: ExperimentConfig) -> FWSolution:
    """Optimal goodput for the config's long-run acceptance rates."""
    horizon = max(config.rounds, 1)
    region = RegionSpec(long_run_alphas(config.profile, horizon), config.capacity)
    return solve_fw(region, config.oracle.max_iters, config.oracle.gap_tol)


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side scheduler results against the fluid optimum."""

    scenario: str
    rounds: int
    oracle_point: tuple[float, ...]
    oracle_utility: float
    oracle_gap: float
    runs: dict  # scheduler -> summary dict + gap_to_oracle
    config: dict  # resolved experiment config, for self-describing output

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "rounds": self.rounds,
            "oracle": {
                "x_star": list(self.oracle_point),
                "utility": self.oracle_utility,
                "fw_gap": self.oracle_gap,
            },
            "runs": self.runs,
            "config": self.config,
        }


def build_comparison(traces: dict, config: ExperimentConfig) -> ComparisonReport:
    """Summaries plus gap-to-oracle per scheduler (same seed, same profile)."""
    solution = oracle_for_config(config)
    runs = {}
    for scheduler, trace in traces.items():
        summary = summarize_run(trace, config, scheduler)
        if trace:
            summary["gap_to_oracle"] = solution.utility - summary["utility_running_avg"]
        else:
            summary["gap_to_oracle"] = None
        runs[scheduler] = summary
    return ComparisonReport(
        scenario=config.scenario,
        rounds=config.rounds,
        oracle_point=solution.point.values,
        oracle_utility=solution.utility,
        oracle_gap=solution.point.fw_gap,
        runs=runs,
        config=config.resolved(),
    )


def write_comparison_csv(path, report: ComparisonReport, config: ExperimentConfig) -> None:
    lines = _header_lines(config, "comparison")
    n = config.clients
    cols = ["scheduler", "U_running_avg", "gap_to_oracle"]
    cols += [f"xbar_{i}" for i in range(n)]
    cols += ["total_ms", "receive_frac", "verify_frac", "send_frac"]
    lines.append(",".join(cols))
    for scheduler, summary in report.runs.items():
        if summary["rounds"] == 0:
            continue
        parts = [scheduler, fmt9(summary["utility_running_avg"]), fmt9(summary["gap_to_oracle"])]
        parts += [fmt9(v) for v in summary["mean_goodput"]]
        parts += [
            fmt9(summary["time_ms"]["total"]),
            fmt9(summary["time_fractions"]["receive"]),
            fmt9(summary["time_fractions"]["verify"]),
            fmt9(summary["time_fractions"]["send"]),
        ]
        lines.append(",".join(parts))
    oracle_parts = ["oracle", fmt9(report.oracle_utility), "0"]
    oracle_parts += [fmt9(v) for v in report.oracle_point]
    oracle_parts += ["", "", "", ""]
    lines.append(",".join(oracle_parts))
    Path(path).write_text("\n".join(lines) + "\n")
