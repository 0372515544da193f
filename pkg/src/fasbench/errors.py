"""Exception taxonomy shared by all numerical modules."""


class FasError(Exception):
    """Base class for all workbench errors."""


class DomainError(FasError):
    """Input outside the validated domain of a special function."""


class PreconditionError(FasError):
    """An operation's documented precondition was violated."""


class SingularInputError(PreconditionError):
    """Input combination is exactly singular (e.g. resonant coupling at k = 0)."""


class DegenerateInputError(PreconditionError):
    """Input degenerate for the requested operation (e.g. packet parallel to a bound state)."""


class AccuracyError(FasError):
    """A tail bound or truncation budget cannot be met.

    Carries ``estimate``: the estimated residual that violated the budget.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NumericalFailureError(FasError):
    """A numerical method failed to converge.

    Carries ``residual`` (best error estimate) and ``where`` (operation / cell identity).
    """

    def __init__(self, message, residual=None, where=None):
        super().__init__(message)
        self.residual = residual
        self.where = where


class ConstructionError(FasError):
    """A reference object failed its construction-time self-check."""


class ConfigError(FasError):
    """Invalid experiment configuration.

    ``key`` is the dotted path of the offending entry (e.g. ``cone.theta``).
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
