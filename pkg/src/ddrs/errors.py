"""Exception hierarchy shared by the codecs, the harness and the CLI."""


class DDRSError(Exception):
    """Base class for every error raised by this package."""


class BitstreamError(DDRSError, ValueError):
    """A bit stream could not be consumed as requested.

    ``position`` is the bit offset at which the problem was detected.
    """

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at bit {position})"
        super().__init__(message)
        self.position = position


class TruncatedStreamError(BitstreamError):
    """The stream ended before a complete field could be read."""


class MalformedStreamError(BitstreamError):
    """The stream is complete but its contents are inconsistent."""


class UnsupportedConfigError(DDRSError, ValueError):
    """The requested operation is not defined for this configuration."""


class IntegrityError(DDRSError, RuntimeError):
    """An internal invariant failed, e.g. a round trip did not reproduce its input."""
