"""Exception types raised across the package."""


class FwmavError(Exception):
    """Base class for all package errors."""


class NonSkew(FwmavError, ValueError):
    """A matrix handed to ``vee`` is not skew-symmetric."""


class Degenerate(FwmavError, ValueError):
    """A matrix cannot be projected onto SO(3)."""


class InvalidRotation(FwmavError, ValueError):
    pass


class SingularMass(FwmavError, ArithmeticError):
    """The mass matrix could not be factorized."""


class NonFinite(FwmavError, ArithmeticError):
    """The integrated state left the finite range."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ChartOverflow(FwmavError, ValueError):
    """Exponential coordinates left the admissible chart domain."""


class ConfigError(FwmavError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry and ``line`` its location."""

    def __init__(self, message, field=None, line=None):
        where = field or ""
        if line is not None:
            where = f"{where} (line {line})" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.field = field
        self.line = line
