"""Exception types shared across the library.

Only failure modes that callers need to distinguish get their own class;
plain input validation raises ValueError.
"""


class ConsensusRegimeError(ValueError):
    """No polarized equilibrium exists; the origin is the only equilibrium.

    Raised when the tolerance/public-spread ratio is at or above the
    critical ratio, so the asymmetric equilibrium formula has no real
    positive root.  Callers should fall back to the consensus equilibrium
    (all parties at 0).
    """


class DivergenceError(RuntimeError):
    """A trajectory produced non-finite positions.

    Carries the step index at which the state stopped being finite.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class DataFormatError(ValueError):
    """An input file violates its documented schema."""


class ConfigError(ValueError):
    """A run configuration is missing keys, has unknown keys, or bad values."""


class FitError(RuntimeError):
    """Parameter calibration could not produce a result."""
