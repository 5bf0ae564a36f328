"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes, so keep the hierarchy flat and
explicit rather than reusing ValueError everywhere.
"""


class DelaycompError(Exception):
    """Base class for all package errors."""


class ConfigError(DelaycompError):
    """Invalid scenario configuration; the message names the offending key."""


class UsageError(DelaycompError):
    """Dimension mismatch or otherwise malformed call arguments."""


class GridMismatchError(UsageError):
    """Profiles on different grids (or with different arity) were combined."""


class FutureQueryError(DelaycompError):
    """A control value was requested past the end of the recorded history."""


class BlowUpError(DelaycompError):
    """A trajectory or predictor march left the finite range.

    Attributes carry the location of failure: `time` for temporal marches,
    `x` for spatial ones (either may be None).
    """

    def __init__(self, message, *, time=None, x=None):
        super().__init__(message)
        self.time = time
        self.x = x


class IllConditionedTransitionError(DelaycompError):
    """A transition matrix became numerically singular (cond > threshold)."""
