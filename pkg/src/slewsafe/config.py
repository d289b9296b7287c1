"""Crane parameter records, validation, and config file handling.

All quantities are SI (kg, m, s, rad) unless a field name says otherwise.
The boom is treated as a rigid link of length ``boom_length`` elevated by
``boom_elevation`` so the payload suspension point travels on a circle of
radius R = boom_length * cos(boom_elevation).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, fields, replace

import yaml

DEFAULT_TIMESTEP = 1.0 / 240.0

# Environment variable consulted by the CLI for a default config path.
CONFIG_ENV_VAR = "SLEWSAFE_CONFIG"


@dataclass(frozen=True)
class CraneConfig:
    """Static description of one crane configuration.

    ``structure_mass`` is the lower structure (everything that does not slew
    with the boom), with its centre of mass ``structure_com_offset`` behind
    the slew axis on the counterweight side, opposite the boom.  The support
    footprint is a square of half width ``footprint_half_width`` centred on
    the slew axis; tipping is evaluated about its four edges.
    """

    structure_mass: float = 7.24          # kg, lower structure incl. counterweight
    boom_mass: float = 2.93               # kg, slewing structure lumped at boom_com_fraction * R
    payload_mass: float = 0.5             # kg
    boom_length: float = 0.9144           # m
    boom_elevation: float = 0.6983        # rad; R = boom_length * cos(elevation)
    rope_length: float = 0.5715           # m, suspension point to payload c.o.m.
    boom_com_fraction: float = 0.5        # boom c.o.m. sits at this fraction of R
    footprint_half_width: float = 0.10    # m, square support footprint half width
    structure_com_offset: float = 0.045   # m, structure c.o.m. behind slew axis
    gravity: float = 9.81                 # m/s^2
    max_torque: float = 1.1               # N*m, slew drive limit
    equivalent_inertia: float | None = None  # kg*m^2; derived from masses when None
    speed_limit: float = 0.5675           # rad/s, allowed slew rate (32.51 deg/s)
    # the cap is tuned so the rated load at the longest reach (R = 0.7) can
    # tip from swing at full slew rate while shorter reaches keep enough
    # margin to run flat out; see the bending-limit notes in the README
    bending_moment_limit: float | None = 3.45  # N*m cap on payload_mass*g*R; None disables

    # -- derived geometry ------------------------------------------------

    @property
    def radius(self) -> float:
        """Horizontal distance from slew axis to the suspension point."""
        return self.boom_length * math.cos(self.boom_elevation)

    @property
    def inertia(self) -> float:
        """Equivalent rotary inertia of the slewing assembly about the axis."""
        if self.equivalent_inertia is not None:
            return self.equivalent_inertia
        return default_inertia(self.payload_mass, self.boom_mass, self.radius)

    @property
    def accel_gain(self) -> float:
        """Peak slew acceleration max_torque / inertia, rad/s^2."""
        return self.max_torque / self.inertia

    def at_radius(self, radius: float) -> "CraneConfig":
        """Same crane with the boom luffed so the payload circle has ``radius``."""
        if not 0.0 < radius <= self.boom_length:
            raise ValueError(
                f"radius must be in (0, boom_length={self.boom_length}], got {radius}"
            )
        return replace(self, boom_elevation=math.acos(radius / self.boom_length))

    def validate(self) -> "CraneConfig":
        positive = (
            "structure_mass", "boom_mass", "boom_length", "rope_length",
            "gravity", "max_torque", "speed_limit",
        )
        for name in positive:
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.payload_mass < 0.0:
            raise ValueError(f"payload_mass must be >= 0, got {self.payload_mass}")
        if not 0.0 <= self.boom_elevation < math.pi / 2:
            raise ValueError(
                f"boom_elevation must be in [0, pi/2), got {self.boom_elevation}"
            )
        if not 0.0 < self.boom_com_fraction <= 1.0:
            raise ValueError(
                f"boom_com_fraction must be in (0, 1], got {self.boom_com_fraction}"
            )
        if self.footprint_half_width <= 0.0:
            raise ValueError(
                f"footprint_half_width must be > 0, got {self.footprint_half_width}"
            )
        if self.structure_com_offset < 0.0:
            raise ValueError(
                f"structure_com_offset must be >= 0, got {self.structure_com_offset}"
            )
        if self.equivalent_inertia is not None and self.equivalent_inertia <= 0.0:
            raise ValueError(
                f"equivalent_inertia must be > 0, got {self.equivalent_inertia}"
            )
        if self.bending_moment_limit is not None and self.bending_moment_limit <= 0.0:
            raise ValueError(
                f"bending_moment_limit must be > 0, got {self.bending_moment_limit}"
            )
        return self


def default_inertia(payload_mass: float, boom_mass: float, radius: float) -> float:
    """Equivalent slewing inertia: point payload plus a uniform boom."""
    return payload_mass * radius**2 + boom_mass * radius**2 / 3.0


@dataclass(frozen=True)
class AnalysisConfig:
    """Sweep grids and run settings for the batch analyses."""

    crane: CraneConfig = field(default_factory=CraneConfig)
    # radii past 0.7 m are dropped from the default grid: there the tipping
    # limit falls below the bending-cap mass and the chart mass sits on a
    # knife edge where any slewing at all tips the crane
    radius_grid: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7)
    boom_length_grid: tuple[float, ...] = (0.6096, 0.7620, 0.9144, 1.0668)
    speed_fractions: tuple[float, ...] = (0.5, 0.75, 1.0)
    deflection_ratio: float = 0.3
    timestep: float = DEFAULT_TIMESTEP
    settle_periods: float = 3.0
    start_angle: float = math.pi / 4     # slews run start_angle -> start_angle + slew_angle
    slew_angle: float = math.pi / 2
    speed_resolution: float = math.radians(0.1)  # rad/s bisection resolution
    alpha_scan_step: float = math.radians(1.0)   # static-limit slew angle scan step

    def validate(self) -> "AnalysisConfig":
        self.crane.validate()
        if not self.radius_grid or any(r <= 0 for r in self.radius_grid):
            raise ValueError(f"radius_grid entries must be > 0, got {self.radius_grid}")
        if not self.boom_length_grid or any(b <= 0 for b in self.boom_length_grid):
            raise ValueError(
                f"boom_length_grid entries must be > 0, got {self.boom_length_grid}"
            )
        for f in self.speed_fractions:
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"speed_fractions must lie in [0, 1], got {f}")
        if not 0.0 < self.deflection_ratio <= 0.5:
            raise ValueError(
                f"deflection_ratio must be in (0, 0.5], got {self.deflection_ratio}"
            )
        if self.timestep <= 0.0:
            raise ValueError(f"timestep must be > 0, got {self.timestep}")
        if self.slew_angle <= 0.0:
            raise ValueError(f"slew_angle must be > 0, got {self.slew_angle}")
        if self.speed_resolution <= 0.0:
            raise ValueError(f"speed_resolution must be > 0, got {self.speed_resolution}")
        return self


# -- (de)serialisation ---------------------------------------------------

_CRANE_KEYS = {f.name for f in fields(CraneConfig)}
_ANALYSIS_KEYS = {f.name for f in fields(AnalysisConfig)} - {"crane"}


def config_from_mapping(data: dict) -> AnalysisConfig:
    if not isinstance(data, dict):
        raise ValueError("config root must be a mapping")
    crane_data = data.get("crane", {}) or {}
    unknown = set(crane_data) - _CRANE_KEYS
    if unknown:
        raise ValueError(f"unknown crane config fields: {sorted(unknown)}")
    crane = CraneConfig(**crane_data)
    rest = {k: v for k, v in data.items() if k != "crane"}
    unknown = set(rest) - _ANALYSIS_KEYS
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    for key in ("radius_grid", "boom_length_grid", "speed_fractions"):
        if key in rest:
            rest[key] = tuple(rest[key])
    cfg = AnalysisConfig(crane=crane, **rest)
    return cfg.validate()


def config_to_mapping(cfg: AnalysisConfig) -> dict:
    crane = {f.name: getattr(cfg.crane, f.name) for f in fields(CraneConfig)}
    out = {"crane": crane}
    for name in sorted(_ANALYSIS_KEYS):
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = list(value)
        out[name] = value
    return out


def load_config(path: str | os.PathLike | None = None) -> AnalysisConfig:
    """Load an AnalysisConfig from a YAML file, or defaults when path is None."""
    if path is None:
        return AnalysisConfig().validate()
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_mapping(data)


def save_config(cfg: AnalysisConfig, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_mapping(cfg), fh, sort_keys=True)


def config_fingerprint(cfg: AnalysisConfig) -> str:
    """Stable short hash of the full effective configuration.

    Embedded in every CSV artifact so outputs can be traced to their inputs.
    """
    canonical = json.dumps(config_to_mapping(cfg), sort_keys=True, separators=(",", ":"),
                           default=float)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
