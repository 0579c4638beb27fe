"""Exception types shared across the package.

Every error raised by library code derives from FforestError so callers
(and the CLI) can catch one base class. The CLI maps library errors to
exit code 1; bad invocations are caught during argument validation and
exit with 2 before any of these can be raised.
"""


class FforestError(Exception):
    """Base class for all library errors."""


class IoError(FforestError):
    """A file is missing or unreadable."""


class DecodeError(FforestError):
    """A file exists but its contents cannot be parsed."""


class TooSmallError(FforestError):
    """An input image is below the 16x16 minimum."""


class BadScaleError(FforestError):
    """A patch-scale value outside {1, 2, 3, 4}."""


class SchemaError(FforestError):
    """A structured document does not match the expected layout."""


class RangeError(FforestError):
    """A numeric value falls outside its documented range."""


class EmptySetError(FforestError):
    """An operation that needs at least one sample got none."""


class SingleClassError(FforestError):
    """Both class labels are required but only one is present."""


class DimensionMismatchError(FforestError):
    """A feature vector's length does not match the trained dimension."""


class TooFewSamplesError(FforestError):
    """Not enough samples per class for the requested split or folds."""


class NonFiniteError(FforestError):
    """A computation produced NaN or infinity."""


class BadSizeError(FforestError):
    """A resize target outside the supported set."""


class LengthMismatchError(FforestError):
    """Two parallel sequences differ in length."""


class VersionError(FforestError):
    """A model archive with an unknown format version."""
