"""Exception hierarchy shared by all engines."""


class EnersimError(Exception):
    """Base class for every error raised by the package."""


class InputError(EnersimError, ValueError):
    """Malformed user input: files, configs, arguments."""


class DimensionError(EnersimError, ValueError):
    """Array shapes or grids do not match."""


class RangeError(EnersimError, ValueError):
    """A value falls outside the admissible range."""


class DegenerateFeatureError(EnersimError, ValueError):
    """A data column has zero spread (max == min or zero variance)."""


class ConsistencyError(EnersimError, ValueError):
    """An input violates a normalisation or consistency requirement."""


class StabilityError(EnersimError, ValueError):
    """An explicit time step exceeds its stability bound.

    ``admissible_dt`` carries the largest step that would have been accepted.
    """

    def __init__(self, message: str, admissible_dt: float):
        super().__init__(message)
        self.admissible_dt = admissible_dt


class NumericalError(EnersimError, RuntimeError):
    """NaN/Inf or another numerical breakdown during a run."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
