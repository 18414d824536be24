class SlimeVoteError(Exception):
    """Base class for package errors."""


class ParameterError(SlimeVoteError, ValueError):
    pass


class EncodingError(SlimeVoteError, ValueError):
    pass


class SeedingError(EncodingError):
    pass


class MeasurementError(SlimeVoteError):
    """Raised when a world cannot be measured (empty population)."""


class IndeterminateResult(SlimeVoteError):
    """A readout landed exactly on the centre line; no winner can be named."""
