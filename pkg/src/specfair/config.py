"""Experiment configuration: strict JSON parsing, defaults, presets.

Unknown keys are rejected everywhere with the offending key named, so a typo
cannot silently fall back to a default. ``ExperimentConfig.resolved()`` emits
a dict that parses back to the same configuration, which is how outputs embed
their full provenance and how sweeps derive modified runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .estimators import SmoothingParams, SmoothingSchedule
from .profiles import (
    AcceptanceProfile,
    LatencyParams,
    PiecewiseProfile,
    RandomWalkProfile,
    StationaryProfile,
    TokenModelProfile,
)
from .seeding import STREAM_MODELS, substream
from .tokens import MarkovLM, random_model_pair

SCHEDULER_KINDS = ("gradient", "fixed", "random")
OUTPUT_FORMATS = ("csv", "jsonl")
SWEEPABLE = ("beta", "eta", "capacity", "clients")

__all__ = [
    "SCHEDULER_KINDS",
    "OUTPUT_FORMATS",
    "SWEEPABLE",
    "ConfigError",
    "OutputOptions",
    "OracleOptions",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "override_parameter",
    "preset_dir",
    "preset_path",
]


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending key."""


def _mapping(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"'{path}' must be a mapping")
    return dict(obj)


def _unknown(d: dict, path: str) -> None:
    if d:
        keys = ", ".join(repr(k) for k in sorted(map(str, d)))
        raise ConfigError(f"unknown key(s) under '{path}': {keys}")


def _get_int(d: dict, key: str, path: str, *, default=None, minimum=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing required key '{path}.{key}'")
        return default
    value = d.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{path}.{key}' must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{path}.{key}' must be >= {minimum}")
    return value


def _get_float(d: dict, key: str, path: str, *, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"missing required key '{path}.{key}'")
        return default
    value = d.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}.{key}' must be a number")
    return float(value)


def _get_str(d: dict, key: str, path: str, *, default=None, choices=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing required key '{path}.{key}'")
        return default
    value = d.pop(key)
    if not isinstance(value, str):
        raise ConfigError(f"'{path}.{key}' must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"'{path}.{key}' must be one of {list(choices)}")
    return value


def _float_list(value, path: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{path}' must be a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"'{path}[{i}]' must be a number")
        out.append(float(v))
    return out


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "out"
    fmt: str = "csv"
    plots: bool = False


@dataclass(frozen=True)
class OracleOptions:
    gap_tol: float = 1e-6
    max_iters: int = 100_000
    restarts: int = 8


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    The ``*_spec`` dicts preserve the user-facing form (defaults applied, but
    scalars not broadcast), so ``resolved()`` round-trips through
    :func:`parse_config` and parameter sweeps can rewrite single keys.
    """

    scenario: str
    clients: int
    capacity: int
    rounds: int
    schedulers: tuple[str, ...]
    utility: str
    smoothing: SmoothingParams
    profile: AcceptanceProfile
    latency: LatencyParams
    seed: int
    output: OutputOptions
    oracle: OracleOptions
    smoothing_spec: dict = field(compare=False)
    profile_spec: dict = field(compare=False)
    latency_spec: dict = field(compare=False)

    def resolved(self) -> dict:
        return {
            "scenario": self.scenario,
            "clients": self.clients,
            "capacity": self.capacity,
            "rounds": self.rounds,
            "scheduler": list(self.schedulers),
            "utility": self.utility,
            "smoothing": json.loads(json.dumps(self.smoothing_spec)),
            "profile": json.loads(json.dumps(self.profile_spec)),
            "latency": json.loads(json.dumps(self.latency_spec)),
            "seed": self.seed,
            "output": {
                "dir": self.output.directory,
                "format": self.output.fmt,
                "plots": self.output.plots,
            },
            "oracle": {
                "gap_tol": self.oracle.gap_tol,
                "max_iters": self.oracle.max_iters,
                "restarts": self.oracle.restarts,
            },
        }


def _parse_schedule(value, path: str) -> tuple[SmoothingSchedule, object]:
    """A schedule is either a bare constant or {'coef':..., 'exponent':...}."""
    if isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a number or a decay mapping")
    if isinstance(value, (int, float)):
        step = float(value)
        if not 0.0 < step < 1.0:
            raise ConfigError(f"'{path}' must lie strictly inside (0, 1)")
        return SmoothingSchedule.constant(step), step
    d = _mapping(value, path)
    coef = _get_float(d, "coef", path, required=True)
    exponent = _get_float(d, "exponent", path, required=True)
    _unknown(d, path)
    try:
        sched = SmoothingSchedule.decay(coef, exponent)
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None
    return sched, {"coef": coef, "exponent": exponent}


def _parse_smoothing(value, path: str) -> tuple[SmoothingParams, dict]:
    d = _mapping(value if value is not None else {}, path)
    eta_raw = d.pop("eta", 0.1)
    beta_raw = d.pop("beta", 0.5)
    _unknown(d, path)
    eta, eta_spec = _parse_schedule(eta_raw, f"{path}.eta")
    beta, beta_spec = _parse_schedule(beta_raw, f"{path}.beta")
    try:
        params = SmoothingParams(eta, beta)
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None
    return params, {"eta": eta_spec, "beta": beta_spec}


def _levels_from(d: dict, clients: int, path: str, key: str, spread_key: str) -> tuple[list[float], dict]:
    has_list = key in d
    has_spread = spread_key in d
    if has_list == has_spread:
        raise ConfigError(f"'{path}' needs exactly one of '{key}' or '{spread_key}'")
    if has_list:
        levels = _float_list(d.pop(key), f"{path}.{key}")
        if len(levels) != clients:
            raise ConfigError(f"'{path}.{key}' must list one value per client ({clients})")
        return levels, {key: levels}
    spread = _float_list(d.pop(spread_key), f"{path}.{spread_key}")
    if len(spread) != 2 or spread[0] > spread[1]:
        raise ConfigError(f"'{path}.{spread_key}' must be [low, high] with low <= high")
    if clients == 1:
        levels = [0.5 * (spread[0] + spread[1])]
    else:
        levels = [float(v) for v in np.linspace(spread[0], spread[1], clients)]
    return levels, {spread_key: spread}


def _parse_markov(value, path: str) -> MarkovLM:
    d = _mapping(value, path)
    initial = d.pop("initial", None)
    rows = d.pop("rows", None)
    _unknown(d, path)
    if initial is None or rows is None:
        raise ConfigError(f"'{path}' needs 'initial' and 'rows'")
    if not isinstance(rows, list) or not rows:
        raise ConfigError(f"'{path}.rows' must be a non-empty list of weight rows")
    try:
        return MarkovLM.from_weights(
            _float_list(initial, f"{path}.initial"),
            [_float_list(r, f"{path}.rows[{i}]") for i, r in enumerate(rows)],
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None


def _parse_profile(value, clients: int, seed: int, path: str) -> tuple[AcceptanceProfile, dict]:
    d = _mapping(value, path)
    kind = _get_str(d, "kind", path)
    try:
        if kind == "stationary":
            levels, spec_levels = _levels_from(d, clients, path, "levels", "spread")
            _unknown(d, path)
            return StationaryProfile(tuple(levels)), {"kind": kind, **spec_levels}
        if kind == "piecewise":
            raw = d.pop("clients", None)
            _unknown(d, path)
            if not isinstance(raw, list) or len(raw) != clients:
                raise ConfigError(f"'{path}.clients' must list one entry per client ({clients})")
            segments = []
            spec_clients = []
            for i, entry in enumerate(raw):
                e = _mapping(entry, f"{path}.clients[{i}]")
                levels = _float_list(e.pop("levels", None), f"{path}.clients[{i}].levels")
                switches = e.pop("switch_rounds", [])
                _unknown(e, f"{path}.clients[{i}]")
                if not isinstance(switches, list):
                    raise ConfigError(f"'{path}.clients[{i}].switch_rounds' must be a list")
                if len(levels) != len(switches) + 1:
                    raise ConfigError(
                        f"'{path}.clients[{i}]' needs one more level than switch rounds"
                    )
                starts = [0]
                for j, s in enumerate(switches):
                    if isinstance(s, bool) or not isinstance(s, int) or s < 1:
                        raise ConfigError(
                            f"'{path}.clients[{i}].switch_rounds[{j}]' must be a positive integer"
                        )
                    starts.append(s)
                segments.append(tuple(zip(starts, levels)))
                spec_clients.append({"levels": levels, "switch_rounds": list(switches)})
            return (
                PiecewiseProfile(tuple(segments)),
                {"kind": kind, "clients": spec_clients},
            )
        if kind == "random-walk":
            starts, spec_starts = _levels_from(d, clients, path, "start", "start_spread")
            step = _get_float(d, "step", path, required=True)
            bounds = _float_list(d.pop("bounds", None), f"{path}.bounds")
            _unknown(d, path)
            if len(bounds) != 2:
                raise ConfigError(f"'{path}.bounds' must be [low, high]")
            profile = RandomWalkProfile(tuple(starts), step, bounds[0], bounds[1], seed)
            return profile, {"kind": kind, **spec_starts, "step": step, "bounds": bounds}
        if kind == "token-model":
            if "pairs" in d:
                raw_pairs = d.pop("pairs")
                _unknown(d, path)
                if not isinstance(raw_pairs, list) or len(raw_pairs) != clients:
                    raise ConfigError(f"'{path}.pairs' must list one pair per client ({clients})")
                pairs = []
                spec_pairs = []
                for i, entry in enumerate(raw_pairs):
                    e = _mapping(entry, f"{path}.pairs[{i}]")
                    draft_raw = e.pop("draft", None)
                    target_raw = e.pop("target", None)
                    _unknown(e, f"{path}.pairs[{i}]")
                    if draft_raw is None or target_raw is None:
                        raise ConfigError(f"'{path}.pairs[{i}]' needs 'draft' and 'target'")
                    pairs.append(
                        (
                            _parse_markov(draft_raw, f"{path}.pairs[{i}].draft"),
                            _parse_markov(target_raw, f"{path}.pairs[{i}].target"),
                        )
                    )
                    spec_pairs.append({"draft": draft_raw, "target": target_raw})
                return TokenModelProfile(pairs), {"kind": kind, "pairs": spec_pairs}
            vocab = _get_int(d, "vocab", path, minimum=2)
            if vocab > 32:
                raise ConfigError(f"'{path}.vocab' must be at most 32")
            model_seed = _get_int(d, "model_seed", path, default=seed, minimum=0)
            mismatch = _get_float(d, "mismatch", path, default=0.5)
            _unknown(d, path)
            if not 0.0 <= mismatch <= 1.0:
                raise ConfigError(f"'{path}.mismatch' must lie in [0, 1]")
            pairs = [
                random_model_pair(vocab, substream(model_seed, STREAM_MODELS, i), mismatch)
                for i in range(clients)
            ]
            return (
                TokenModelProfile(pairs),
                {"kind": kind, "vocab": vocab, "model_seed": model_seed, "mismatch": mismatch},
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None
    raise ConfigError(
        f"'{path}.kind' must be one of ['stationary', 'piecewise', 'random-walk', 'token-model']"
    )


def _per_client(value, clients: int, path: str) -> tuple[tuple[float, ...], object]:
    if isinstance(value, list):
        values = _float_list(value, path)
        if len(values) != clients:
            raise ConfigError(f"'{path}' must list one value per client ({clients})")
        return tuple(values), values
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number or per-client list")
    return (float(value),) * clients, float(value)


def _parse_latency(value, clients: int, path: str) -> tuple[LatencyParams, dict]:
    d = _mapping(value if value is not None else {}, path)
    draft_raw = d.pop("draft_ms_per_token", 8.0)
    uplink_raw = d.pop("uplink_ms", 5.0)
    verify_fixed = _get_float(d, "verify_ms_fixed", path, default=20.0)
    verify_per_token = _get_float(d, "verify_ms_per_token", path, default=1.0)
    send = _get_float(d, "send_ms", path, default=0.05)
    _unknown(d, path)
    draft, draft_spec = _per_client(draft_raw, clients, f"{path}.draft_ms_per_token")
    uplink, uplink_spec = _per_client(uplink_raw, clients, f"{path}.uplink_ms")
    try:
        latency = LatencyParams(draft, uplink, verify_fixed, verify_per_token, send)
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None
    spec = {
        "draft_ms_per_token": draft_spec,
        "uplink_ms": uplink_spec,
        "verify_ms_fixed": verify_fixed,
        "verify_ms_per_token": verify_per_token,
        "send_ms": send,
    }
    return latency, spec


def _parse_output(value, path: str) -> OutputOptions:
    d = _mapping(value if value is not None else {}, path)
    directory = _get_str(d, "dir", path, default="out")
    fmt = _get_str(d, "format", path, default="csv", choices=OUTPUT_FORMATS)
    plots = d.pop("plots", False)
    _unknown(d, path)
    if not isinstance(plots, bool):
        raise ConfigError(f"'{path}.plots' must be true or false")
    return OutputOptions(directory, fmt, plots)


def _parse_oracle(value, path: str) -> OracleOptions:
    d = _mapping(value if value is not None else {}, path)
    gap_tol = _get_float(d, "gap_tol", path, default=1e-6)
    max_iters = _get_int(d, "max_iters", path, default=100_000, minimum=1)
    restarts = _get_int(d, "restarts", path, default=8, minimum=1)
    _unknown(d, path)
    if gap_tol <= 0.0:
        raise ConfigError(f"'{path}.gap_tol' must be positive")
    return OracleOptions(gap_tol, max_iters, restarts)


def _parse_schedulers(value, path: str) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{path}' must be a scheduler name or non-empty list of names")
    out = []
    for i, name in enumerate(value):
        if not isinstance(name, str) or name not in SCHEDULER_KINDS:
            raise ConfigError(f"'{path}[{i}]' must be one of {list(SCHEDULER_KINDS)}")
        if name in out:
            raise ConfigError(f"'{path}' lists {name!r} twice")
        out.append(name)
    return tuple(out)


def parse_config(data, source: str = "config") -> ExperimentConfig:
    """Validate a raw mapping into an :class:`ExperimentConfig` (strict)."""
    d = _mapping(data, source)
    scenario = _get_str(d, "scenario", source, default="experiment")
    clients = _get_int(d, "clients", source, minimum=1)
    capacity = _get_int(d, "capacity", source, minimum=1)
    rounds = _get_int(d, "rounds", source, minimum=0)
    seed = _get_int(d, "seed", source, default=0, minimum=0)
    if "scheduler" not in d:
        raise ConfigError(f"missing required key '{source}.scheduler'")
    schedulers = _parse_schedulers(d.pop("scheduler"), f"{source}.scheduler")
    utility = _get_str(d, "utility", source, default="log", choices=("log",))
    smoothing, smoothing_spec = _parse_smoothing(d.pop("smoothing", None), f"{source}.smoothing")
    if "profile" not in d:
        raise ConfigError(f"missing required key '{source}.profile'")
    profile, profile_spec = _parse_profile(d.pop("profile"), clients, seed, f"{source}.profile")
    latency, latency_spec = _parse_latency(d.pop("latency", None), clients, f"{source}.latency")
    output = _parse_output(d.pop("output", None), f"{source}.output")
    oracle = _parse_oracle(d.pop("oracle", None), f"{source}.oracle")
    _unknown(d, source)
    return ExperimentConfig(
        scenario=scenario,
        clients=clients,
        capacity=capacity,
        rounds=rounds,
        schedulers=schedulers,
        utility=utility,
        smoothing=smoothing,
        profile=profile,
        latency=latency,
        seed=seed,
        output=output,
        oracle=oracle,
        smoothing_spec=smoothing_spec,
        profile_spec=profile_spec,
        latency_spec=latency_spec,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    p = Path(path)
    try:
        raw = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
    return parse_config(data, source="config")


def override_parameter(config: ExperimentConfig, name: str, value) -> ExperimentConfig:
    """New config with one swept parameter replaced; re-validated from scratch.

    ``beta`` and ``eta`` become constant steps; ``capacity`` and ``clients``
    replace the corresponding counts. Profiles and latency given as explicit
    per-client lists cannot be resized and are rejected when clients changes.
    """
    raw = config.resolved()
    if name in ("beta", "eta"):
        raw["smoothing"][name] = value
    elif name == "capacity":
        raw["capacity"] = value
    elif name == "clients":
        raw["clients"] = value
    else:
        raise ConfigError(f"unknown sweep parameter {name!r}; choose from {list(SWEEPABLE)}")
    return parse_config(raw, source="config")


def preset_dir() -> Path:
    return Path(str(resources.files("specfair") / "presets"))


def preset_path(name: str) -> Path:
    p = preset_dir() / f"{name}.json"
    if not p.exists():
        raise ConfigError(f"no preset named {name!r} under {preset_dir()}")
    return p
