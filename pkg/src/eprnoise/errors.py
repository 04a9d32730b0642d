"""Exception hierarchy.

Argument/config problems derive from ``ValueError``; numerical failures
derive from :class:`NumericalError` so the CLI can map them to exit code 2.
"""


class EprNoiseError(Exception):
    """Base class for all package errors."""


class InvalidArgument(EprNoiseError, ValueError):
    pass


class InconsistentState(EprNoiseError, ValueError):
    """Objects that must share a frequency grid (or labels) do not."""


class AboveThreshold(InvalidArgument):
    """OPO pump parameter at or above oscillation threshold (x >= 1)."""


class NumericalError(EprNoiseError, ArithmeticError):
    pass


class NumericalSingularity(NumericalError):
    pass


class DegenerateConditioning(NumericalError):
    """Idler auto-spectrum vanishes, so nothing can be conditioned on it."""


class PoleError(NumericalError):
    """Error-signal prefactor evaluated at its pole x = 1."""


class FitFailure(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(InvalidArgument):
    def __init__(self, reason, path=None, key=None, line=None):
        self.reason = reason
        self.path = path
        self.key = key
        self.line = line
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + reason)
