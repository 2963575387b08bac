"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A constructor or operation received an out-of-range parameter."""


class NoLossError(InvalidParameterError):
    """A loss-aware distribution was requested for a window with zero losses.

    Callers should send zero encoding symbols instead.
    """


class InfeasibleCapError(InvalidParameterError):
    """The requested maximum degree is below the minimum useful degree."""


class InvalidInputError(ValueError):
    """Malformed decoder input: duplicate indices, length mismatches, etc."""


class DecodeFailure(RuntimeError):
    """Decoding could not complete with the available symbols."""

    def __init__(self, message: str, unresolved: int = 0, stage: str | None = None):
        super().__init__(message)
        self.unresolved = unresolved
        self.stage = stage


class SessionFailure(RuntimeError):
    """A transfer session exhausted its repair budget on some window."""

    def __init__(self, message: str, window: int, unresolved: int):
        super().__init__(message)
        self.window = window
        self.unresolved = unresolved
