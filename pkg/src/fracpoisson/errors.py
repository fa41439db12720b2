"""Exception types shared across the solver stack."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Inconsistent or unsupported configuration (domains, orders, hierarchies)."""


class UnsupportedConfigurationError(ConfigurationError):
    """A configuration that is valid syntax but deliberately not supported."""


class DataError(ValueError):
    """Problem data (right-hand side values) is not usable, e.g. non-finite."""


class AssemblyError(RuntimeError):
    """Finite element assembly failed, e.g. on a degenerate cell."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its required accuracy."""


class NonConvergenceError(NumericalError):
    """Iterative solver exceeded its iteration cap.

    Carries the final relative residual in ``residual``.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class IllConditionedBasisError(NumericalError):
    """Spectral basis is numerically dependent; advise a larger decimation threshold."""


class TruncationError(NumericalError):
    """A series could not be truncated to the requested accuracy within its cap."""
