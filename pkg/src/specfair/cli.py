"""Command-line front end: run | oracle | compare | sweep.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Each command prints a JSON summary to stdout; trace files, comparison tables,
and optional PNG figures land in the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    ConfigError,
    ExperimentConfig,
    SWEEPABLE,
    load_config,
    override_parameter,
    parse_config,
)
from .oracle import small_instance_optimum
from .oracle import ENUMERATION_MAX_CAPACITY, ENUMERATION_MAX_CLIENTS, RegionSpec
from .profiles import long_run_alphas
from .reporting import (
    build_comparison,
    oracle_for_config,
    summarize_run,
    write_comparison_csv,
    write_sweep_csv,
    write_trace_csv,
    write_trace_jsonl,
)
from .scheduling import utility_log
from .simulation import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specfair",
        description="Simulate speculative-decoding clients under a shared verification budget",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument(
            "--format", choices=("csv", "jsonl"), default=None, help="trace format override"
        )

    run_p = sub.add_parser("run", help="run one scheduler and write its trace")
    common(run_p)
    run_p.add_argument("--plots", action="store_true", help="also render PNG figures")
    run_p.set_defaults(func=cmd_run)

    oracle_p = sub.add_parser("oracle", help="solve for the optimal goodput allocation")
    common(oracle_p)
    oracle_p.set_defaults(func=cmd_oracle)

    compare_p = sub.add_parser("compare", help="run every configured scheduler and compare")
    common(compare_p)
    compare_p.add_argument("--plots", action="store_true", help="also render PNG figures")
    compare_p.set_defaults(func=cmd_compare)

    sweep_p = sub.add_parser("sweep", help="re-run while sweeping one parameter")
    common(sweep_p)
    sweep_p.add_argument("--param", required=True, choices=SWEEPABLE)
    sweep_p.add_argument("--values", required=True, help="comma-separated sweep values")
    sweep_p.set_defaults(func=cmd_sweep)
    return parser


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    raw = config.resolved()
    changed = False
    if args.seed is not None:
        raw["seed"] = args.seed
        changed = True
    if args.format is not None:
        raw["output"]["format"] = args.format
        changed = True
    if args.out is not None:
        raw["output"]["dir"] = args.out
        changed = True
    return parse_config(raw) if changed else config


def _outdir(config: ExperimentConfig) -> Path:
    path = Path(config.output.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_trace(outdir: Path, config: ExperimentConfig, scheduler: str, trace) -> Path:
    suffix = "csv" if config.output.fmt == "csv" else "jsonl"
    path = outdir / f"{config.scenario}_{scheduler}.{suffix}"
    if config.output.fmt == "csv":
        write_trace_csv(path, trace, config, scheduler)
    else:
        write_trace_jsonl(path, trace, config, scheduler)
    return path


def cmd_run(args) -> int:
    config = _load(args)
    scheduler = config.schedulers[0]
    trace = run_experiment(config, scheduler)
    outdir = _outdir(config)
    trace_path = _write_trace(outdir, config, scheduler, trace)
    figure_paths: list[Path] = []
    if (args.plots or config.output.plots) and trace:
        from .figures import render_run_figures

        solution = oracle_for_config(config)
        figure_paths = render_run_figures(trace, config, scheduler, outdir, solution.utility)
    payload = {
        "command": "run",
        "scenario": config.scenario,
        "seed": config.seed,
        "trace": str(trace_path),
        "figures": [str(p) for p in figure_paths],
        "summary": summarize_run(trace, config, scheduler),
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_oracle(args) -> int:
    config = _load(args)
    alphas = long_run_alphas(config.profile, max(config.rounds, 1))
    region = RegionSpec(alphas, config.capacity)
    solution = oracle_for_config(config)
    if (
        region.clients <= ENUMERATION_MAX_CLIENTS
        and region.capacity <= ENUMERATION_MAX_CAPACITY
    ):
        grid_point = small_instance_optimum(region, config.oracle.restarts)
        cross = {
            "status": "ok",
            "utility": utility_log(grid_point.values),
            "gap": solution.utility - utility_log(grid_point.values),
        }
    else:
        cross = {"status": "skipped", "reason": "instance exceeds the enumeration guard"}
    payload = {
        "command": "oracle",
        "scenario": config.scenario,
        "alphas": [float(a) for a in alphas],
        "capacity": config.capacity,
        "x_star": [float(v) for v in solution.point.values],
        "utility": solution.utility,
        "fw_gap": solution.point.fw_gap,
        "iterations": solution.iterations,
        "cross_check": cross,
    }
    print(json.dumps(payload, indent=2))
    return 0 if solution.point.fw_gap <= config.oracle.gap_tol else 1


def cmd_compare(args) -> int:
    config = _load(args)
    if len(config.schedulers) < 2:
        print("compare needs at least two schedulers in the config", file=sys.stderr)
        return 2
    traces = {k: run_experiment(config, k) for k in config.schedulers}
    report = build_comparison(traces, config)
    outdir = _outdir(config)
    json_path = outdir / f"{config.scenario}_compare.json"
    json_path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
    csv_path = outdir / f"{config.scenario}_compare.csv"
    write_comparison_csv(csv_path, report, config)
    trace_paths = {k: str(_write_trace(outdir, config, k, traces[k])) for k in traces}
    figure_paths: list[Path] = []
    if (args.plots or config.output.plots) and config.rounds > 0:
        from .figures import render_compare_figures

        figure_paths = render_compare_figures(traces, report, config, outdir)
    payload = report.to_json()
    payload.update(
        {
            "command": "compare",
            "report_json": str(json_path),
            "report_csv": str(csv_path),
            "traces": trace_paths,
            "figures": [str(p) for p in figure_paths],
        }
    )
    print(json.dumps(payload, indent=2))
    return 0


def cmd_sweep(args) -> int:
    config = _load(args)
    raw_values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not raw_values:
        print("sweep needs at least one value", file=sys.stderr)
        return 2
    values: list[object] = []
    for v in raw_values:
        try:
            values.append(int(v) if args.param in ("capacity", "clients") else float(v))
        except ValueError:
            print(f"cannot parse sweep value {v!r} for {args.param}", file=sys.stderr)
            return 2
    scheduler = config.schedulers[0]
    blocks = []
    summaries = []
    for value in values:
        swept = override_parameter(config, args.param, value)
        trace = run_experiment(swept, scheduler)
        blocks.append((args.param, value, scheduler, swept, trace))
        entry = summarize_run(trace, swept, scheduler)
        entry["swept_value"] = value
        summaries.append(entry)
    outdir = _outdir(config)
    csv_path = outdir / f"{config.scenario}_sweep_{args.param}.csv"
    write_sweep_csv(csv_path, blocks, config)
    payload = {
        "command": "sweep",
        "scenario": config.scenario,
        "param": args.param,
        "values": values,
        "csv": str(csv_path),
        "summaries": summaries,
    }
    print(json.dumps(payload, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, distinct from usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
