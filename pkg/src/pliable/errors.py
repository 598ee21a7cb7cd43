"""Typed errors raised across the library."""


class PliableError(Exception):
    """Base class for library errors."""


class SignatureMismatch(PliableError):
    pass


class PartialAssignment(PliableError):
    pass


class InvalidInput(PliableError):
    """Malformed structure, graph, LP or parameter."""


class CapExceeded(PliableError):
    """An enumeration or memory cap would be exceeded."""


class VerificationError(PliableError):
    """A supplied or constructed witness failed exact verification."""


class InfiniteDistance(PliableError):
    """Edit distance is infinite: one side has an empty symbol, the other not."""
