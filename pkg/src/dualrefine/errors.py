"""Exception hierarchy shared by all modules."""


class DualRefineError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(DualRefineError, ValueError):
    pass


class RangeError(DualRefineError, ValueError):
    pass


class EmptyDomainError(DualRefineError, ValueError):
    """Raised when a reduction has no admissible element to act on."""


class SizeError(DualRefineError, ValueError):
    pass


class SpecError(DualRefineError, ValueError):
    pass


class SamplingError(DualRefineError, RuntimeError):
    pass


class FormatError(DualRefineError, OSError):
    """Malformed file. ``offset`` is the byte offset where decoding failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
