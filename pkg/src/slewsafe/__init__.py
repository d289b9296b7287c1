"""Crane slewing simulator with swing-suppressing input shaping."""

__version__ = "0.1.0"

from .config import AnalysisConfig, CraneConfig, load_config
from .dynamics import SimState, SlewState, SwingState, natural_frequency
from .shaper import (
    AccelCommand,
    ShaperSpec,
    VelocityReference,
    design_mumzv,
    residual_vibration,
)

__all__ = [
    "AnalysisConfig",
    "CraneConfig",
    "load_config",
    "SimState",
    "SlewState",
    "SwingState",
    "natural_frequency",
    "AccelCommand",
    "ShaperSpec",
    "VelocityReference",
    "design_mumzv",
    "residual_vibration",
    "__version__",
]
