"""Exception hierarchy shared by every module."""


class LocboundError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LocboundError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConvergenceError(LocboundError, ArithmeticError):
    """Adaptive quadrature ran out of subdivisions.

    The best estimate and its error bound are kept on the exception so that
    callers can decide whether the result is still usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NotPSDError(LocboundError, ArithmeticError):
    """Matrix is not positive definite above the jitter floor."""


class SingularGeometryError(LocboundError, ArithmeticError):
    """Fisher information is singular (single sensor or collinear layout)."""


class DegenerateGeometryError(LocboundError, ValueError):
    """A sensor coincides with the source."""


class InsufficientDataError(LocboundError, ValueError):
    """Not enough sensors to form the requested quantity."""


class ResourceLimitError(LocboundError, MemoryError):
    """Requested configuration would allocate an absurd amount of work."""


class ConfigError(LocboundError, ValueError):
    """Configuration text failed validation.

    ``problems`` is a list of ``(line_number, message)`` pairs; line 0 is used
    for problems that are not tied to a single line.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"line {ln}: {msg}" if ln else msg for ln, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
