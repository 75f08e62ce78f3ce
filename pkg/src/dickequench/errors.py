"""Exception types raised across the package."""


class DickeError(Exception):
    """Base class for all package errors."""


class SpaceMismatchError(DickeError, ValueError):
    """Operands live on incompatible Hilbert spaces."""


class TruncationLossError(DickeError):
    """A state cannot be represented on the truncated Fock space."""

    def __init__(self, message, deficit=None):
        super().__init__(message)
        self.deficit = deficit


class SubcriticalCouplingError(DickeError, ValueError):
    """A superradiant-only quantity was requested with g <= g_c."""


class RegimeError(DickeError, ValueError):
    """A closed-form approximation was evaluated outside its validity range."""


class ConfigError(DickeError, ValueError):
    """Invalid run configuration. ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None):
        where = ""
        if field is not None:
            where += f"[{field}] "
        if line is not None:
            where += f"(line {line}) "
        super().__init__(where + message)
        self.field = field
        self.line = line


class NumericalFailure(DickeError, RuntimeError):
    """An integrator failed to meet its accuracy contract."""


class PositivityWarning(UserWarning):
    """A propagated density operator acquired a noticeably negative eigenvalue."""
