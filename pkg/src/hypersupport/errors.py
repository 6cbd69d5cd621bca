"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input."""


class DegenerateInputError(InputError):
    """Input is geometrically degenerate (rank deficient, zero thickness, ...)."""


class InvariantViolation(RuntimeError):
    """A recursion invariant failed beyond tolerance.

    Carries the partial selection trace so the failing step can be inspected.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class VerificationError(RuntimeError):
    """A returned hyperplane failed an independent check."""
