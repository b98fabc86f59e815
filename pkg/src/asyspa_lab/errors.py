"""Exception hierarchy shared by all modules."""


class AsySPAError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(AsySPAError, ValueError):
    """Invalid argument or parameter combination."""


class StateError(AsySPAError, RuntimeError):
    """Operation not allowed in the object's current state."""


class RoutingError(AsySPAError, ValueError):
    """Message delivered to the wrong node."""


class InvariantViolation(AsySPAError, RuntimeError):
    """A runtime invariant of the algorithm or its assumptions was broken."""


class ScheduleViolation(InvariantViolation):
    """A generalized-subgradient schedule broke its declared bounds."""


class ReconstructionError(AsySPAError, ValueError):
    """A trace cannot be mapped onto the augmented delay-free system."""


class ConfigError(AsySPAError, ValueError):
    """Experiment configuration failed validation.

    ``path`` holds the location of the offending field, e.g. ``"timing.tau_min"``.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
