"""Exception types shared across the package."""


class PerturbenchError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(PerturbenchError):
    """A file or byte stream does not match its documented format."""


class DomainError(PerturbenchError, ValueError):
    """An argument is outside the operation's documented domain."""


class StructureError(PerturbenchError):
    """A composite object violates a structural invariant (counts, keys, dims)."""


class VersionError(PerturbenchError):
    """Inputs carry incompatible wire-contract versions."""
