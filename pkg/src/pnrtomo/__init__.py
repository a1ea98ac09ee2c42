"""Gaussian state and channel tomography from photon-number-resolved counts."""

from .channel import GaussianChannel, apply_channel, is_cp
from .channel_tomography import make_channel_plan, tomograph_channel
from .errors import (
    ConfigError,
    InconsistentMeasurements,
    InvariantViolation,
    MissingMeasurement,
    PnrTomoError,
)
from .measurement import EXACT, GateSpec, MeasurementSetting, ShotBudget
from .state import GaussianState, SqueezedThermalParams
from .state_tomography import make_state_plan, tomograph_state

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EXACT",
    "GateSpec",
    "GaussianChannel",
    "GaussianState",
    "InconsistentMeasurements",
    "InvariantViolation",
    "MeasurementSetting",
    "MissingMeasurement",
    "PnrTomoError",
    "ShotBudget",
    "SqueezedThermalParams",
    "apply_channel",
    "is_cp",
    "make_channel_plan",
    "make_state_plan",
    "tomograph_channel",
    "tomograph_state",
]
