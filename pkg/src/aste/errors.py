"""Exception types raised across the package."""


class AsteError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(AsteError):
    """A corpus, dependency, or prediction file violates its format."""


class EmptyAnnotationError(FormatError):
    """A sample lacks the required minimum of one aspect and one opinion."""


class DanglingGroupError(FormatError):
    """A pair-group marker has no counterpart on the other side."""


class OverlapError(AsteError):
    """Spans that must be disjoint overlap."""


class DimensionError(AsteError):
    """A vector has the wrong dimensionality."""


class ShapeError(AsteError):
    """Tensor or sequence shapes are inconsistent."""


class ConfigError(AsteError):
    """A training configuration cannot be executed."""


class AlignmentError(AsteError):
    """Predictions and gold annotations do not cover the same sentences."""


class CompatibilityError(AsteError):
    """Two checkpoints were not built against the same vocabulary."""
