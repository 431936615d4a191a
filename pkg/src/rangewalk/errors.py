"""Exception types shared across the package."""


class RangeWalkError(Exception):
    """Base class for all package errors."""


class ValidationError(RangeWalkError):
    """A parameter or input failed validation."""


class WindowExhaustedError(RangeWalkError):
    """An operation ran off the generated window and needs more path.

    Carries which side must grow and a suggested number of steps so the
    caller can extend and retry.
    """

    def __init__(self, side: str, needed: int, message: str | None = None):
        self.side = side
        self.needed = int(needed)
        super().__init__(
            message or f"window exhausted on {side} side, extend by >= {needed} steps"
        )


class ReproducibilityError(RangeWalkError):
    """A generator stream does not match the stored stream state."""


class SamplingFailureError(RangeWalkError):
    """Rejection sampling exhausted its attempt budget."""

    def __init__(self, attempts: int, message: str | None = None):
        self.attempts = int(attempts)
        super().__init__(message or f"sampling failed after {attempts} attempts")


class CertificationError(RangeWalkError):
    """A computation touched path regions outside certified cut coverage."""


class ExtensionBudgetError(RangeWalkError):
    """Adaptive window growth hit its budget before the target was met."""

    def __init__(self, budget: int, sup_value: float, message: str | None = None):
        self.budget = int(budget)
        self.sup_value = float(sup_value)
        super().__init__(
            message
            or f"extension budget {budget} exhausted (current sup {sup_value:.6g})"
        )


class NonSelfAvoidingError(RangeWalkError):
    """A self-avoiding path was required but the input revisits a vertex."""


class NumericalError(RangeWalkError):
    """A linear solve or probability reconstruction left numeric tolerance."""
