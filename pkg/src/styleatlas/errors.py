"""Exception hierarchy shared by all styleatlas modules."""


class StyleAtlasError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(StyleAtlasError):
    """An argument violates a documented precondition."""


class InvalidDimension(InvalidInput):
    """Vector/matrix/tensor shapes are inconsistent."""


class InvalidLayer(InvalidInput):
    """A layer index is out of range for the given weights."""


class FormatError(StyleAtlasError):
    """A serialized artifact is malformed.

    ``offset`` is the byte position at which the problem was detected,
    when known.
    """

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (at byte {offset})")
        self.offset = offset


class TrainingDiverged(StyleAtlasError):
    """A loss became non-finite during training; ``step`` is the failing step."""

    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step


class NumericalFailure(StyleAtlasError):
    """An iterative numerical routine failed to converge."""


class NumericalWarning(UserWarning):
    """A numerical self-check failed in a non-fatal way."""


class ValidationError(StyleAtlasError):
    """A study response violates its scale or structural constraints."""


class Conflict(StyleAtlasError):
    """A duplicate submission was rejected; the original record is retained."""


class NotFound(StyleAtlasError):
    """A referenced experiment, session, stimulus, or image does not exist."""


class Unauthorized(StyleAtlasError):
    """Missing or invalid credentials for an admin operation."""


class Undefined(StyleAtlasError):
    """A statistic is undefined for the given data (e.g. no pairable values)."""


class NoData(StyleAtlasError):
    """An aggregate was requested over an empty collection."""
