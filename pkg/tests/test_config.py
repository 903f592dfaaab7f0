from __future__ import annotations

import json

import pytest

from cosmic_mu.config import ConfigError, OutputFormat, Scenario, load_config, parse_config
from cosmic_mu.const import CHSH_ANGLES, DEFAULT_SEED, DEFAULT_TRIALS


def test_minimal_dilation_document():
    config = parse_config('{"scenario": "dilation", "g": 9.8, "h": 10, "t": 3.156e7}')
    assert config.scenario is Scenario.DILATION
    assert config.dilation.g == 9.8
    assert config.dilation.h == 10
    assert config.dilation.t == 3.156e7


def test_defaults_are_filled():
    config = parse_config('{"scenario": "bell"}')
    assert config.seed == DEFAULT_SEED
    assert config.trials == DEFAULT_TRIALS
    assert config.angles.b_prime == CHSH_ANGLES["b_prime"]
    assert config.geometry.offset is None
    assert config.output.format is OutputFormat.CSV


def test_missing_scenario_names_the_field():
    with pytest.raises(ConfigError, match="scenario"):
        parse_config('{"seed": 3}')


def test_zero_trials_is_rejected():
    with pytest.raises(ConfigError, match="trials"):
        parse_config('{"scenario": "bell", "trials": 0}')


@pytest.mark.parametrize(
    "document, field",
    [
        ({"scenario": "bell", "colour": "red"}, "colour"),
        ({"scenario": "bell", "geometry": {"L": 1.0, "bogus": 1}}, "geometry.bogus"),
        ({"scenario": "bell", "geometry": {"L": 1.0, "d": 3.0}}, "geometry"),
        ({"scenario": "double-bell", "geometry": {"velocity": 1.0}}, "geometry.velocity"),
        ({"scenario": "double-bell", "geometry": {"offset_t": 1.0}}, "geometry"),
        ({"scenario": "foliation", "field": {"a": 1.0, "epsilon": 0.5}}, "field"),
        ({"scenario": "foliation", "field": {"target": "phi"}}, "field.target"),
        ({"scenario": "frame-scan", "frame_scan": {"velocities": [0.5, 1.2]}}, "frame_scan.velocities"),
        ({"scenario": "teleport"}, "scenario"),
        ({"scenario": "bell", "seed": -1}, "seed"),
        ({"scenario": "bell", "seed": 2**64}, "seed"),
        ({"scenario": "bell", "schema_version": 2}, "schema_version"),
        ({"scenario": "dilation", "dilation": {"g": 0}}, "dilation.g"),
    ],
)
def test_invalid_documents_name_the_field(document, field):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(document))
    assert str(info.value).startswith(field)


def test_syntax_errors_report_position():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('{"scenario": "bell",\n  "seed": }')


def test_document_must_be_an_object():
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


def test_round_trip():
    config = parse_config(
        json.dumps(
            {
                "scenario": "double-bell",
                "seed": 7,
                "trials": 1234,
                "geometry": {"L": 1.5, "d": 0.4, "velocity": -0.9, "offset_t": 0.1, "offset_x": 0.2},
                "field": {"epsilon": 0.02, "levels": [1.0, 2.0]},
                "policy": {"theta_base": 0.1, "delta": 1.2},
                "output": {"format": "json"},
            }
        )
    )
    assert parse_config(config.to_json()) == config
    assert config.geometry.offset == (0.1, 0.2)


def test_overrides():
    config = parse_config('{"scenario": "bell", "seed": 1, "trials": 10}')
    changed = config.with_overrides(seed=99, trials=None, out="elsewhere", format="json")
    assert changed.seed == 99
    assert changed.trials == 10
    assert changed.output.path == "elsewhere"
    assert changed.output.format is OutputFormat.JSON
    with pytest.raises(ConfigError, match="trials"):
        config.with_overrides(trials=0)


def test_config_is_frozen():
    config = parse_config('{"scenario": "bell"}')
    with pytest.raises(Exception):
        config.seed = 5


def test_load_config(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text('{"scenario": "frame-scan"}', encoding="utf-8")
    assert load_config(path).scenario is Scenario.FRAME_SCAN
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
