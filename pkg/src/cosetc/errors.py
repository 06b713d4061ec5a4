"""Exception hierarchy shared by every module."""


class CosetcError(Exception):
    """Base class for all library errors."""


class MalformedWordError(CosetcError, ValueError):
    """A word mentions a generator outside the alphabet or cannot be parsed."""


class ResourceError(CosetcError):
    """A configurable cap (states, vertices, elements) was exceeded."""


class CapabilityError(CosetcError):
    """The backend cannot answer this query exactly, or a hypothesis fails."""


class PreconditionError(CosetcError, ValueError):
    """An operation was called with arguments violating its contract."""


class ConfigError(CosetcError):
    """Invalid run configuration. ``errors`` lists every violated constraint."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
