"""Strict config parsing: defaults, round-trips, offending-key errors."""

import json

import pytest

from specfair.config import (
    ConfigError,
    load_config,
    override_parameter,
    parse_config,
    preset_dir,
    preset_path,
)
from specfair.profiles import RandomWalkProfile, StationaryProfile, TokenModelProfile


def minimal(**overrides):
    raw = {
        "clients": 2,
        "capacity": 4,
        "rounds": 10,
        "scheduler": "gradient",
        "profile": {"kind": "stationary", "levels": [0.4, 0.6]},
    }
    raw.update(overrides)
    return raw


class TestParsing:
    def test_minimal_config_with_defaults(self):
        cfg = parse_config(minimal())
        assert cfg.scenario == "experiment"
        assert cfg.schedulers == ("gradient",)
        assert cfg.utility == "log"
        assert cfg.seed == 0
        assert cfg.smoothing.eta.value == 0.1
        assert cfg.smoothing.beta.value == 0.5
        assert cfg.latency.send_ms == 0.05
        assert cfg.output.fmt == "csv"

    def test_unknown_top_level_key_named(self):
        with pytest.raises(ConfigError, match="'capactiy'"):
            parse_config(minimal(capactiy=4))

    def test_unknown_nested_key_named(self):
        raw = minimal()
        raw["smoothing"] = {"eta": 0.1, "beta": 0.5, "gamma": 0.2}
        with pytest.raises(ConfigError, match="'gamma'"):
            parse_config(raw)

    def test_missing_required_key_named(self):
        raw = minimal()
        del raw["profile"]
        with pytest.raises(ConfigError, match="profile"):
            parse_config(raw)

    def test_bad_scheduler_name(self):
        with pytest.raises(ConfigError, match="scheduler"):
            parse_config(minimal(scheduler="fifo"))

    def test_duplicate_scheduler(self):
        with pytest.raises(ConfigError, match="twice"):
            parse_config(minimal(scheduler=["gradient", "gradient"]))

    def test_level_count_mismatch(self):
        raw = minimal()
        raw["profile"] = {"kind": "stationary", "levels": [0.4]}
        with pytest.raises(ConfigError, match="levels"):
            parse_config(raw)

    def test_levels_and_spread_mutually_exclusive(self):
        raw = minimal()
        raw["profile"] = {"kind": "stationary", "levels": [0.4, 0.6], "spread": [0.3, 0.9]}
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(raw)

    def test_spread_resolves_to_linspace(self):
        raw = minimal(clients=3)
        raw["profile"] = {"kind": "stationary", "spread": [0.3, 0.9]}
        cfg = parse_config(raw)
        assert isinstance(cfg.profile, StationaryProfile)
        assert cfg.profile.levels == pytest.approx((0.3, 0.6, 0.9))

    def test_out_of_range_level(self):
        raw = minimal()
        raw["profile"] = {"kind": "stationary", "levels": [0.4, 0.99]}
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_piecewise_needs_one_more_level(self):
        raw = minimal(clients=1)
        raw["profile"] = {
            "kind": "piecewise",
            "clients": [{"levels": [0.3, 0.8], "switch_rounds": [10, 20]}],
        }
        with pytest.raises(ConfigError, match="one more level"):
            parse_config(raw)

    def test_random_walk_parses(self):
        raw = minimal()
        raw["profile"] = {
            "kind": "random-walk",
            "start": [0.4, 0.6],
            "step": 0.02,
            "bounds": [0.2, 0.8],
        }
        cfg = parse_config(raw)
        assert isinstance(cfg.profile, RandomWalkProfile)

    def test_token_model_generated(self):
        raw = minimal()
        raw["profile"] = {"kind": "token-model", "vocab": 6, "model_seed": 4, "mismatch": 0.3}
        cfg = parse_config(raw)
        assert isinstance(cfg.profile, TokenModelProfile)
        assert len(cfg.profile.pairs) == 2

    def test_latency_broadcast_and_lists(self):
        raw = minimal()
        raw["latency"] = {"draft_ms_per_token": [8.0, 4.0], "uplink_ms": 2.5}
        cfg = parse_config(raw)
        assert cfg.latency.draft_ms_per_token == (8.0, 4.0)
        assert cfg.latency.uplink_ms == (2.5, 2.5)

    def test_bool_is_not_an_int(self):
        with pytest.raises(ConfigError):
            parse_config(minimal(rounds=True))

    def test_resolved_round_trips(self):
        for profile in (
            {"kind": "stationary", "spread": [0.3, 0.9]},
            {"kind": "random-walk", "start_spread": [0.3, 0.7], "step": 0.02, "bounds": [0.2, 0.8]},
            {"kind": "token-model", "vocab": 4, "model_seed": 2, "mismatch": 0.5},
        ):
            raw = minimal()
            raw["profile"] = profile
            cfg = parse_config(raw)
            again = parse_config(cfg.resolved())
            assert again.resolved() == cfg.resolved()

    def test_load_config_rejects_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)


class TestOverrideParameter:
    def test_beta_override(self):
        cfg = parse_config(minimal())
        swept = override_parameter(cfg, "beta", 0.05)
        assert swept.smoothing.beta.value == 0.05

    def test_capacity_override(self):
        cfg = parse_config(minimal())
        assert override_parameter(cfg, "capacity", 9).capacity == 9

    def test_clients_override_resizes_spread_profile(self):
        raw = minimal()
        raw["profile"] = {"kind": "stationary", "spread": [0.3, 0.9]}
        swept = override_parameter(parse_config(raw), "clients", 5)
        assert swept.clients == 5
        assert len(swept.profile.levels) == 5

    def test_clients_override_rejects_explicit_levels(self):
        cfg = parse_config(minimal())
        with pytest.raises(ConfigError):
            override_parameter(cfg, "clients", 5)

    def test_unknown_parameter(self):
        cfg = parse_config(minimal())
        with pytest.raises(ConfigError, match="sweep parameter"):
            override_parameter(cfg, "gamma", 1)


class TestPresets:
    def test_all_presets_parse(self):
        names = sorted(p.stem for p in preset_dir().glob("*.json"))
        assert names, "no presets shipped"
        for name in names:
            cfg = load_config(preset_path(name))
            assert cfg.rounds >= 1

    def test_hetero_preset_matches_documented_shape(self):
        cfg = load_config(preset_path("hetero8_c16"))
        assert cfg.clients == 8
        assert cfg.capacity == 16
        assert cfg.rounds == 2000
        assert cfg.smoothing.beta.value == 0.05
        assert cfg.smoothing.eta.value == 0.1
        assert cfg.schedulers[0] == "gradient"
        assert min(cfg.profile.levels) == 0.3
        assert max(cfg.profile.levels) == 0.9

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="no preset"):
            preset_path("nonexistent")
