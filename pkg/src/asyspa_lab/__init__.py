"""Simulation and verification toolkit for asynchronous subgradient-push
optimization over directed graphs."""

from .errors import (
    AsySPAError,
    ConfigError,
    InvariantViolation,
    ParameterError,
    ReconstructionError,
    RoutingError,
    ScheduleViolation,
    StateError,
)
from .estimator import AsySPAClassifier, NonCategoricalScaler
from .graph import AsynchronyBounds, Digraph, asynchrony_bounds, build_topology, validate_strongly_connected
from .simulator import SimConfig, SimResult, Timing, Trace, run
from .stepsize import StepsizeSchedule, window_sum

__version__ = "0.1.0"

__all__ = [
    "AsySPAClassifier",
    "AsySPAError",
    "AsynchronyBounds",
    "ConfigError",
    "Digraph",
    "InvariantViolation",
    "NonCategoricalScaler",
    "ParameterError",
    "ReconstructionError",
    "RoutingError",
    "ScheduleViolation",
    "SimConfig",
    "SimResult",
    "StateError",
    "StepsizeSchedule",
    "Timing",
    "Trace",
    "asynchrony_bounds",
    "build_topology",
    "run",
    "validate_strongly_connected",
    "window_sum",
]
