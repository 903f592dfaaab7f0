"""
Scenario configuration documents.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import json
import math
from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from cosmic_mu.const import (
    CHSH_ANGLES,
    DEFAULT_ARM_LENGTH,
    DEFAULT_CFL_FRACTION,
    DEFAULT_DELAY,
    DEFAULT_FIELD_POINTS,
    DEFAULT_PERTURBATION_BOUND,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    FIELD_WINDOW_MARGIN,
    FRAME_SCAN_VELOCITIES,
    MIN_GRID_POINTS,
    SCHEMA_VERSION,
    SPEED_OF_LIGHT,
)


class ConfigError(ValueError):
    """An unreadable or invalid scenario document."""


class Scenario(StrEnum):
    BELL = "bell"
    DOUBLE_BELL = "double-bell"
    FOLIATION = "foliation"
    DILATION = "dilation"
    FRAME_SCAN = "frame-scan"


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Section):
    L: float = Field(DEFAULT_ARM_LENGTH, gt=0)
    d: float = Field(DEFAULT_DELAY, gt=0)
    velocity: float | None = Field(None, gt=-1, lt=1)
    offset_t: float | None = None
    offset_x: float | None = None
    force_dual_ni: bool = False

    @model_validator(mode="after")
    def _check(self) -> GeometryConfig:
        if self.d >= 2 * self.L:
            raise ValueError(f"d={self.d} must be smaller than 2L={2 * self.L}")
        if (self.offset_t is None) != (self.offset_x is None):
            raise ValueError("offset_t and offset_x must be given together")
        return self

    @property
    def offset(self) -> tuple[float, float] | None:
        if self.offset_t is None:
            return None
        return self.offset_t, self.offset_x


class FieldConfig(_Section):
    a: float = Field(1.0, gt=0)
    t0: float = 0.0
    epsilon: float = Field(0.05, ge=0)
    k: float | None = None
    target: str = Field("mu_dot", pattern="^(mu|mu_dot)$")
    points: int = Field(DEFAULT_FIELD_POINTS, ge=MIN_GRID_POINTS)
    dimensions: int = Field(1, ge=1, le=2)
    dt: float | None = Field(None, gt=0)
    cfl: float = Field(DEFAULT_CFL_FRACTION, gt=0, le=1)
    margin: float = Field(FIELD_WINDOW_MARGIN, ge=0)
    box: float = Field(2 * math.pi, gt=0)
    duration: float = Field(2.0, gt=0)
    levels: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _check(self) -> FieldConfig:
        if self.epsilon > DEFAULT_PERTURBATION_BOUND * self.a:
            raise ValueError(
                f"epsilon={self.epsilon} exceeds {DEFAULT_PERTURBATION_BOUND}·a={DEFAULT_PERTURBATION_BOUND * self.a}"
            )
        return self


class AnglesConfig(_Section):
    a: float = CHSH_ANGLES["a"]
    a_prime: float = CHSH_ANGLES["a_prime"]
    b: float = CHSH_ANGLES["b"]
    b_prime: float = CHSH_ANGLES["b_prime"]


class PolicyConfig(_Section):
    """Controlled inputs take theta_base + delta·(outcome + 1)/2; unset means the arm's own angle pair."""

    theta_base: float | None = None
    delta: float | None = None

    @model_validator(mode="after")
    def _check(self) -> PolicyConfig:
        if (self.theta_base is None) != (self.delta is None):
            raise ValueError("theta_base and delta must be given together")
        return self


class DilationConfig(_Section):
    g: float = Field(9.8, gt=0)
    h: float = Field(1.0, ge=0)
    t: float = Field(3.156e7, ge=0)
    c: float = Field(SPEED_OF_LIGHT, gt=0)


class FrameScanConfig(_Section):
    velocities: tuple[float, ...] = FRAME_SCAN_VELOCITIES
    layout: str = Field("bell", pattern="^(bell|double-bell|einstein)$")

    @field_validator("velocities")
    @classmethod
    def _subluminal(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("at least one velocity is required")
        for v in value:
            if not -1 < v < 1:
                raise ValueError(f"velocity {v} must satisfy |v| < 1")
        return value


class OutputConfig(_Section):
    path: str = "results"
    format: OutputFormat = OutputFormat.CSV


_DILATION_SHORTHAND = ("g", "h", "t", "c")


class ScenarioConfig(_Section):
    schema_version: int = SCHEMA_VERSION
    scenario: Scenario
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    trials: int = Field(DEFAULT_TRIALS, gt=0)
    geometry: GeometryConfig = GeometryConfig()
    field: FieldConfig = FieldConfig()
    angles: AnglesConfig = AnglesConfig()
    policy: PolicyConfig = PolicyConfig()
    dilation: DilationConfig = DilationConfig()
    frame_scan: FrameScanConfig = FrameScanConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="before")
    @classmethod
    def _lift_dilation(cls, data: Any) -> Any:
        """Accept g / h / t / c at top level for the dilation scenario."""
        if not isinstance(data, dict) or not any(k in data for k in _DILATION_SHORTHAND):
            return data
        data = dict(data)
        section = dict(data.get("dilation") or {})
        for key in _DILATION_SHORTHAND:
            if key in data:
                section[key] = data.pop(key)
        data["dilation"] = section
        return data

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {value}, expected {SCHEMA_VERSION}")
        return value

    def with_overrides(self, **overrides: Any) -> ScenarioConfig:
        """Apply CLI overrides; None values are ignored. ``out`` and ``format`` target the output section."""
        data = self.model_dump(mode="json")
        for key in ("seed", "trials"):
            if overrides.get(key) is not None:
                data[key] = overrides[key]
        if overrides.get("out") is not None:
            data["output"]["path"] = str(overrides["out"])
        if overrides.get("format") is not None:
            data["output"]["format"] = overrides["format"]
        return _validate(data)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def _location(loc: tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "<document>"


def _validate(data: Any) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as err:
        first = err.errors()[0]
        raise ConfigError(f"{_location(first['loc'])}: {first['msg']}") from err


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"line {err.lineno}, column {err.colno}: {err.msg}") from err
    if not isinstance(data, dict):
        raise ConfigError("<document>: expected a JSON object")
    return _validate(data)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from err
    return parse_config(text)
