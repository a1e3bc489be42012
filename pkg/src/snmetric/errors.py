"""Exception types shared across the package."""


class SpaceMismatchError(ValueError):
    """Two objects (or series) live in different metric spaces."""


class InvalidObjectError(ValueError):
    """A payload violates the invariants of its space.

    ``index`` is the 0-based position of the offending record when the check
    ran over a batch, else ``None``.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EmptyWindowError(ValueError):
    """A subsample window contains no observations."""


class DegenerateNormalizer(ArithmeticError):
    """The self-normalizer of a statistic is exactly zero (e.g. constant data)."""


class NullMismatchError(ValueError):
    """A simulated null set does not match the requested test settings."""


class CacheError(OSError):
    """A null-sample cache file is corrupt or has mismatched metadata."""
