"""Scenario configuration: a flat, line-oriented key=value file with '#'
comments. Parsing is strict: unknown keys, duplicate keys, missing required
keys, and out-of-range values are all errors."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError


class Scenario(Enum):
    UPPER_BOUND_SWEEP = "UpperBoundSweep"
    NO_CONTROL_SWEEP = "NoControlSweep"
    CONTROLLED_QFI = "ControlledQFI"
    EXPANSION_FIT = "ExpansionFit"
    FRAME_INVARIANCE = "FrameInvariance"
    ADAPTIVE_RUN = "AdaptiveRun"
    APPENDIX_A_DEMO = "AppendixADemo"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str  # "float", "int", "float_list"
    required: bool = False
    default: Any = None
    minimum: Optional[float] = None


_COMMON_FIELDS = (
    FieldSpec("steps", "int", required=False, default=None, minimum=10),
    FieldSpec("seed", "int", required=False, default=0),
    FieldSpec("out", "str", required=False, default=None),
    FieldSpec("format", "str", required=False, default=None),
)

_SCENARIO_FIELDS: dict[Scenario, tuple[FieldSpec, ...]] = {
    Scenario.UPPER_BOUND_SWEEP: (
        FieldSpec("B", "float_list", required=True),
        FieldSpec("T", "float_list", required=True),
        FieldSpec("omega", "float", required=False, default=1.0),
    ),
    Scenario.NO_CONTROL_SWEEP: (
        FieldSpec("B", "float", required=True),
        FieldSpec("omega", "float", required=True),
        FieldSpec("T", "float_list", required=True),
    ),
    Scenario.CONTROLLED_QFI: (
        FieldSpec("B", "float_list", required=True),
        FieldSpec("T", "float_list", required=True),
        FieldSpec("omega", "float", required=False, default=1.0),
        FieldSpec("delta_omega", "float", required=False, default=0.0),
    ),
    Scenario.EXPANSION_FIT: (
        FieldSpec("B", "float", required=True),
        FieldSpec("omega", "float", required=True),
        FieldSpec("T", "float", required=True),
        FieldSpec("delta_grid", "float_list", required=True),
    ),
    Scenario.FRAME_INVARIANCE: (
        FieldSpec("B", "float", required=True),
        FieldSpec("omega_c", "float", required=True),
        FieldSpec("delta_omega", "float", required=False, default=0.01),
        FieldSpec("n_periods", "int", required=False, default=1, minimum=1),
    ),
    Scenario.ADAPTIVE_RUN: (
        FieldSpec("B", "float", required=True),
        FieldSpec("omega", "float", required=True),
        FieldSpec("omega_c0", "float", required=True),
        FieldSpec("T", "float", required=True),
        FieldSpec("rounds", "int", required=True, minimum=1),
        FieldSpec("shots", "int", required=True, minimum=1),
        FieldSpec("probe_shots", "int", required=False, default=None, minimum=1),
    ),
    Scenario.APPENDIX_A_DEMO: (
        FieldSpec("B", "float", required=True),
        FieldSpec("omega", "float", required=True),
        FieldSpec("delta_omega", "float", required=False, default=0.1),
        FieldSpec("n_periods", "int", required=False, default=1, minimum=1),
    ),
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    values: dict = field(repr=False)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)


def _convert(spec: FieldSpec, raw: str, line_no: int):
    try:
        if spec.kind == "float":
            value = float(raw)
            if not np.isfinite(value):
                raise ValueError("non-finite")
            return value
        if spec.kind == "int":
            return int(raw)
        if spec.kind == "float_list":
            items = [float(x) for x in raw.split(",") if x.strip() != ""]
            if not items or not all(np.isfinite(v) for v in items):
                raise ValueError("empty or non-finite list")
            return items
        if spec.kind == "str":
            return raw
    except ValueError as exc:
        raise ConfigError(
            f"line {line_no}: field '{spec.name}' expects {spec.kind}, "
            f"got {raw!r} ({exc})"
        ) from None
    raise ConfigError(f"line {line_no}: unsupported field kind {spec.kind}")


def parse_config_text(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate config text; see parse_config for the file variant."""
    raw_pairs: dict[str, tuple[str, int]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: line {line_no}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{source}: line {line_no}: empty key")
        if key in raw_pairs:
            raise ConfigError(
                f"{source}: line {line_no}: duplicate key '{key}' "
                f"(first on line {raw_pairs[key][1]})"
            )
        raw_pairs[key] = (value, line_no)

    if "scenario" not in raw_pairs:
        raise ConfigError(f"{source}: missing required key 'scenario'")
    scenario_raw, scen_line = raw_pairs.pop("scenario")
    try:
        scenario = Scenario(scenario_raw)
    except ValueError:
        names = ", ".join(s.value for s in Scenario)
        raise ConfigError(
            f"{source}: line {scen_line}: unknown scenario {scenario_raw!r} "
            f"(expected one of: {names})"
        ) from None

    specs = {s.name: s for s in _SCENARIO_FIELDS[scenario] + _COMMON_FIELDS}
    values: dict[str, Any] = {}
    for key, (raw, line_no) in raw_pairs.items():
        if key not in specs:
            raise ConfigError(
                f"{source}: line {line_no}: unknown key '{key}' for scenario "
                f"{scenario.value}"
            )
        spec = specs[key]
        value = _convert(spec, raw, line_no)
        if spec.minimum is not None:
            bad = (
                any(v < spec.minimum for v in value)
                if isinstance(value, list)
                else value < spec.minimum
            )
            if bad:
                raise ConfigError(
                    f"{source}: line {line_no}: field '{key}' must be >= "
                    f"{spec.minimum}, got {raw!r}"
                )
        values[key] = value
    for spec in specs.values():
        if spec.name not in values:
            if spec.required:
                raise ConfigError(
                    f"{source}: missing required key '{spec.name}' for scenario "
                    f"{scenario.value}"
                )
            values[spec.name] = spec.default
    if values.get("format") not in (None, "csv", "json"):
        raise ConfigError(
            f"{source}: field 'format' must be csv or json, got {values['format']!r}"
        )
    return ScenarioConfig(scenario=scenario, values=values)


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read, parse and validate a scenario config file (UTF-8)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file is not valid UTF-8: {path} ({exc})") from None
    return parse_config_text(text, source=str(path))
