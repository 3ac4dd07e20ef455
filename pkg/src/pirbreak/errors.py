"""Exception hierarchy shared across the package."""


class PirBreakError(Exception):
    """Base class for all package errors."""


class SingularMatrix(PirBreakError, ValueError):
    pass


class GenerationFailure(PirBreakError, RuntimeError):
    pass


class ExtractionError(PirBreakError, ValueError):
    pass


class PrecisionFailure(PirBreakError, ArithmeticError):
    """Floating-point Gram-Schmidt could not certify an LLL-reduced output."""


class NoEmbeddingVector(PirBreakError, LookupError):
    """No reduced embedded-basis vector carries the embedding factor."""


class InstanceTooLarge(PirBreakError, ValueError):
    pass


class AttackInconclusive(PirBreakError, RuntimeError):
    """Every block and target was probed without a validated candidate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
