"""Exception types shared across the package.

Plain ``ValueError`` is used for invalid arguments; everything that can
only be detected while a computation runs gets its own class so callers
(and the CLI) can map failures to exit codes.
"""


class SimulationError(Exception):
    """Base class for runtime failures of a simulation."""


class AccuracyError(SimulationError):
    """A grid or tolerance check failed (result would not be trustworthy)."""


class LeakError(SimulationError):
    """Probability reached the grid boundary beyond the allowed monitor level."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class NumericError(SimulationError):
    """NaN/Inf detected during propagation."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class TrackingError(SimulationError):
    """Level identity could not be followed between spectrum samples."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class ModelValidityError(SimulationError):
    """Projected few-level model is ill-conditioned (basis nearly dependent)."""


class CalibrationError(SimulationError):
    """Partner-depth calibration could not be carried out."""


class AttributionError(SimulationError):
    """Population attribution cross-check disagreed beyond tolerance."""


class ConfigError(ValueError):
    """Configuration file violates the schema; ``path`` points at the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
