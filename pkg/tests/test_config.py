"""Tests for YAML experiment configuration loading."""

import pytest

from scatune.config import ConfigError, load_config, parse_hex_key
from scatune.tuning import Dynamic, Static

GOOD = """\
key: "2b7e151628aed2a6abf7158809cf4f3c"
master_seed: 42
pool_size: 500
power_model:
  v_nominal: 1.08
  background_mean: 50.0
  background_jitter_sd: 4.0
  noise_sd: 0.0
ttd:
  confidence: 0.9
  trials: 25
  step: 10
  start: auto
scenarios:
  - label: baseline
    groups:
      - group: text
        strengths: {mode: static, value: 1.0}
        vccs: {mode: static, value: 1.08}
      - group: other
        strengths: {mode: static, value: 1.0}
        vccs: {mode: static, value: 1.08}
  - label: dyn-joint
    groups:
      - group: text
        strengths: {mode: dynamic, universe: [0.5, 1, 2, 3, 4]}
        vccs: {mode: dynamic, universe: [0.90, 0.99, 1.08]}
      - group: other
        strengths: {mode: dynamic, universe: [0.5, 1, 2, 3, 4]}
        vccs: {mode: dynamic, universe: [0.90, 0.99, 1.08]}
"""


def _write(tmp_path, text, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_good_config(tmp_path):
    cfg = load_config(_write(tmp_path, GOOD))
    assert cfg.key == bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    assert cfg.master_seed == 42
    assert cfg.pool_size == 500
    assert cfg.params.background_mean == 50.0
    assert cfg.ttd.trials == 25
    assert set(cfg.scenarios) == {"baseline", "dyn-joint"}
    base = cfg.scenario("baseline")
    assert isinstance(base.text_ffs.strength, Static)
    dyn = cfg.scenario("dyn-joint")
    assert isinstance(dyn.text_ffs.strength, Dynamic)
    assert dyn.text_ffs.vcc.universe == (0.90, 0.99, 1.08)


def test_unknown_scenario_label(tmp_path):
    cfg = load_config(_write(tmp_path, GOOD))
    with pytest.raises(ConfigError):
        cfg.scenario("nope")


def test_parse_hex_key_validation():
    assert parse_hex_key("00" * 16) == bytes(16)
    with pytest.raises(ConfigError):
        parse_hex_key("zz" * 16)
    with pytest.raises(ConfigError):
        parse_hex_key("00" * 15)


def test_missing_key_is_config_error(tmp_path):
    broken = GOOD.replace('key: "2b7e151628aed2a6abf7158809cf4f3c"\n', "")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, broken))


def test_bad_mode_is_config_error(tmp_path):
    broken = GOOD.replace("{mode: static, value: 1.0}", "{mode: wobbly, value: 1.0}")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, broken))


def test_duplicate_scenario_label_is_config_error(tmp_path):
    broken = GOOD.replace("label: dyn-joint", "label: baseline")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, broken))
