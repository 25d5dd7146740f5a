"""Exception hierarchy."""


class NlbcError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NlbcError, ValueError):
    """An argument lies outside the domain of the operation."""


class OutOfDomainError(DomainError):
    """A physical point does not belong to the mapped domain."""


class ConfigurationError(NlbcError, ValueError):
    """Inconsistent problem or method configuration."""


class ConvergenceError(NlbcError, RuntimeError):
    """An iterative procedure did not converge."""


class NumericError(NlbcError, ArithmeticError):
    """Degenerate geometry or arithmetic breakdown (singular Jacobian etc.)."""


class SingularSystemError(NlbcError, ArithmeticError):
    """The global matrix has an exactly singular pivot."""
