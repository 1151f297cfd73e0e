"""Experiment configuration: one YAML file drives generation, attacks and
campaigns; CLI flags override individual values.

Example::

    key: "000102030405060708090a0b0c0d0e0f"
    master_seed: 42
    pool_size: 5000
    power_model:
      v_nominal: 1.08
      background_mean: 50.0
      background_jitter_sd: 4.0
      noise_sd: 0.0
      io_leak_weight: 0.0
    ttd:
      confidence: 0.9
      trials: 100
      step: 5
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
      - label: dynamic-joint
        groups:
          - group: text
            strengths: {mode: dynamic, universe: [0.5, 1, 2, 3, 4]}
            vccs: {mode: dynamic, universe: [0.90, 0.99, 1.08]}
            io_emulation: off
          - group: other
            strengths: {mode: dynamic, universe: [0.5, 1, 2, 3, 4]}
            vccs: {mode: dynamic, universe: [0.90, 0.99, 1.08]}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .campaign import TtdConfig
from .power import PowerModelParams
from .tuning import Dynamic, GroupPolicy, Static, TuningScenario


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    key: bytes
    master_seed: int
    pool_size: int
    params: PowerModelParams
    scenarios: dict[str, TuningScenario]
    ttd: TtdConfig = field(default_factory=TtdConfig)
    output_dir: str | None = None

    def scenario(self, label: str) -> TuningScenario:
        try:
            return self.scenarios[label]
        except KeyError:
            raise ConfigError(
                f"unknown scenario {label!r}; defined: {sorted(self.scenarios)}"
            ) from None


def parse_hex_key(text: str) -> bytes:
    try:
        key = bytes.fromhex(text)
    except ValueError as exc:
        raise ConfigError(f"key is not valid hex: {exc}") from exc
    if len(key) != 16:
        raise ConfigError(f"key must be 16 bytes (32 hex chars), got {len(key)}")
    return key


def _parse_mode(spec, where: str):
    if not isinstance(spec, dict) or "mode" not in spec:
        raise ConfigError(f"{where}: expected a mapping with a 'mode' key, got {spec!r}")
    mode = spec["mode"]
    if mode == "static":
        if "value" not in spec:
            raise ConfigError(f"{where}: static mode needs a 'value'")
        return Static(float(spec["value"]))
    if mode == "dynamic":
        if "universe" not in spec:
            raise ConfigError(f"{where}: dynamic mode needs a 'universe' list")
        return Dynamic(tuple(float(v) for v in spec["universe"]))
    raise ConfigError(f"{where}: mode must be 'static' or 'dynamic', got {mode!r}")


def _parse_group(spec: dict, where: str) -> GroupPolicy:
    for required in ("strengths", "vccs"):
        if required not in spec:
            raise ConfigError(f"{where}: missing '{required}'")
    io = spec.get("io_emulation")
    # YAML parses a bare `off` as boolean False.
    io_mode = None if io in (None, False, "off") else _parse_mode(io, f"{where}.io_emulation")
    return GroupPolicy(
        strength=_parse_mode(spec["strengths"], f"{where}.strengths"),
        vcc=_parse_mode(spec["vccs"], f"{where}.vccs"),
        io_emulation=io_mode,
    )


def parse_scenario(spec: dict) -> TuningScenario:
    if "label" not in spec:
        raise ConfigError("scenario without a label")
    label = str(spec["label"])
    groups = {g.get("group"): g for g in spec.get("groups", [])}
    unknown = set(groups) - {"text", "other"}
    if unknown:
        raise ConfigError(f"scenario {label!r}: unknown groups {sorted(unknown)}")
    if "text" not in groups:
        raise ConfigError(f"scenario {label!r}: missing the 'text' group")
    text = _parse_group(groups["text"], f"scenario {label!r} text group")
    if "other" in groups:
        other = _parse_group(groups["other"], f"scenario {label!r} other group")
    else:
        other = GroupPolicy(strength=Static(1.0), vcc=text.vcc)
    return TuningScenario(label=label, text_ffs=text, other_ffs=other)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")

    for required in ("key", "master_seed", "pool_size", "power_model", "scenarios"):
        if required not in doc:
            raise ConfigError(f"config is missing {required!r}")

    try:
        params = PowerModelParams(**doc["power_model"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad power_model section: {exc}") from exc

    scenarios: dict[str, TuningScenario] = {}
    for spec in doc["scenarios"]:
        scenario = parse_scenario(spec)
        if scenario.label in scenarios:
            raise ConfigError(f"duplicate scenario label {scenario.label!r}")
        scenarios[scenario.label] = scenario

    ttd = TtdConfig()
    if "ttd" in doc:
        spec = dict(doc["ttd"])
        if spec.get("start") not in (None, "auto"):
            spec["start"] = int(spec["start"])
        try:
            ttd = TtdConfig(**spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad ttd section: {exc}") from exc

    return ExperimentConfig(
        key=parse_hex_key(str(doc["key"])),
        master_seed=int(doc["master_seed"]),
        pool_size=int(doc["pool_size"]),
        params=params,
        scenarios=scenarios,
        ttd=ttd,
        output_dir=doc.get("output_dir"),
    )
