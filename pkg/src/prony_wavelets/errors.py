"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` for bad input or
configuration, and :class:`NumericalError` for failures of the numerical
pipeline on otherwise valid input. The CLI maps them to distinct exit codes.
"""


class PronyWaveletsError(Exception):
    """Base class for all package errors."""


class ValidationError(PronyWaveletsError, ValueError):
    pass


class NumericalError(PronyWaveletsError, ArithmeticError):
    pass


class LambdaSearchExhausted(NumericalError):
    pass


class IllConditionedError(NumericalError):
    pass


class SingularMaskError(NumericalError):
    pass


class LatticeMatchError(NumericalError):
    """A Prony node could not be mapped to a unique lattice point."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates


class SparsityExceeded(NumericalError):
    pass


class VerificationError(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
