"""Exception hierarchy shared by every module.

The CLI maps input-type errors to exit code 2 and numerical failures to 3.
"""


class CritraceError(Exception):
    """Base class for library errors."""


class InputError(CritraceError, ValueError):
    """Malformed or inadmissible input (CLI exit code 2)."""


class NumericalError(CritraceError, ArithmeticError):
    """A numerical routine failed to deliver a result (CLI exit code 3)."""


class DomainError(InputError):
    pass


class GridMismatchError(InputError):
    pass


class ExponentError(InputError):
    pass


class DivergenceError(InputError):
    pass


class OutOfChartError(InputError):
    pass


class HypothesisError(InputError):
    """A hypothesis required by a formula does not hold."""


class PreconditionError(InputError):
    pass


class InsufficientSamplesError(InputError):
    pass


class UnavailableError(InputError, LookupError):
    """A requested integral does not converge for the given exponent."""


class NotRadialError(InputError):
    """Data cannot be reduced to the (rho, t) half-plane without loss."""


class ConvergenceError(NumericalError):
    pass


class ToleranceNotMetError(ConvergenceError):
    pass


class NonInjectiveError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass
