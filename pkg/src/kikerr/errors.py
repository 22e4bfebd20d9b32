"""Exception hierarchy shared by all modules."""


class KikerrError(Exception):
    """Base class for toolkit errors."""


class ConfigError(KikerrError, ValueError):
    """Missing or inconsistent input parameters.

    ``field`` names the offending configuration key when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(KikerrError, ValueError):
    """Input outside the mathematical domain of an operation."""


class PreconditionError(KikerrError, ValueError):
    """A documented precondition of an operation was violated."""


class OutOfRegimeError(DomainError):
    """Requested evaluation lies outside the implemented physical regime."""


class FitError(KikerrError, RuntimeError):
    """A fit failed to converge or the data cannot constrain the model.

    ``diagnostics`` carries whatever partial information is available.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NormalStateWarning(UserWarning):
    """Emitted when a temperature at or above Tc is requested."""


class FitWarning(UserWarning):
    """Non-fatal fit diagnostic (flagged parameter, non-monotonic data...)."""
