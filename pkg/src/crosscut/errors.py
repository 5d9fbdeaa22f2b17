"""Exception hierarchy for crosscut."""


class CrosscutError(Exception):
    """Base class for all crosscut errors."""


class ConfigError(CrosscutError, ValueError):
    """Invalid configuration or flag combination."""


class GeometryError(CrosscutError, ValueError):
    """Degenerate or invalid geometric input."""


class NonGenericError(CrosscutError, ValueError):
    """Input violates the genericity assumptions (concurrent lines, ambiguous mates)."""

    def __init__(self, message: str, lines: tuple = ()):
        super().__init__(message)
        self.lines = tuple(lines)


class NoiseError(CrosscutError, ValueError):
    """A piece could not be noised within the retry budget."""


class MatingConflictError(CrosscutError, ValueError):
    """Two matings share an edge (mate uniqueness violated)."""


class InconsistencyError(CrosscutError):
    """Clean reconstruction reached a contradictory placement."""


class PhysicsError(CrosscutError):
    """Relaxation state became non-finite."""


class UnsolvableError(CrosscutError):
    """No loop structure could be found under the given noise bound."""


class BundleFormatError(CrosscutError, ValueError):
    """A bundle file could not be parsed or failed validation."""


class FormatVersionError(BundleFormatError):
    """Bundle format_version is not supported by this reader."""


class MissingGroundTruthError(BundleFormatError):
    """An operation needs ground truth that the bundle does not carry."""
