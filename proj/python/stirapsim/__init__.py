"""Intracavity-STIRAP photon interface simulator (C++ core bindings)."""

from stirapsim._core import (  # noqa: F401
    Config,
    ConfigParseError,
    PropagationError,
    PulseConfig,
    Scheme,
    StateSpace,
    ValidationError,
    calibrate,
    feasibility_report,
    preset_names,
    run,
    sweep,
)

__all__ = [
    "Config",
    "ConfigParseError",
    "PropagationError",
    "PulseConfig",
    "Scheme",
    "StateSpace",
    "ValidationError",
    "calibrate",
    "feasibility_report",
    "preset_names",
    "run",
    "sweep",
]
