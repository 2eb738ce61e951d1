"""Exception hierarchy shared by every module.

The CLI maps :class:`NumericalError` subclasses to exit status 3 and prints
the class name, so names are part of the user-facing contract.
"""


class RslimError(Exception):
    """Base class for all package errors."""


class PriorError(RslimError, ValueError):
    pass


class NonPositiveMass(PriorError):
    pass


class DuplicateAtom(PriorError):
    pass


class BadParam(PriorError):
    pass


class NotCentered(RslimError, ValueError):
    pass


class NotPsd(RslimError, ValueError):
    pass


class BadParams(RslimError, ValueError):
    pass


class TooLarge(RslimError, ValueError):
    pass


class NumericalError(RslimError, ArithmeticError):
    """Failure of an iterative or quadrature procedure."""


class QuadratureUnconverged(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class OptimizerStalled(NumericalError):
    pass


class Diverged(NumericalError):
    pass


class PowerIterationStalled(NumericalError):
    pass
