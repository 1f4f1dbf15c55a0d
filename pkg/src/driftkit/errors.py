"""Exception hierarchy for the toolkit.

Every contract violation raises a dedicated subclass of DriftKitError so
callers (and the CLI error reporter) can match on type rather than message.
"""


class DriftKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DriftKitError):
    """Invalid or inconsistent configuration."""


class ParseError(DriftKitError):
    """Malformed manifest / NDJSON row; message names the row and column."""


class MissingFileError(DriftKitError):
    """A referenced data file does not exist or is unreadable."""


class DuplicateIdError(DriftKitError):
    """Two samples share the same sample_id."""


class EmptyClipError(DriftKitError):
    """All audio samples fell below the silence-trim threshold."""


class UnsupportedRateError(DriftKitError):
    """Audio sample rate cannot be resampled to the working rate."""


class EmptyListError(DriftKitError):
    """An operation over a collection received no elements."""


class TooShortError(DriftKitError):
    """Spectrogram has fewer frames than one segment window."""


class DimensionMismatchError(DriftKitError):
    """Vectors or batches disagree on dimensionality."""


class ShapeMismatchError(DimensionMismatchError):
    """Parameter and gradient arrays disagree on shape."""


class EmptyBatchError(DriftKitError):
    """A vector batch or training batch is empty."""


class InsufficientPointsError(DriftKitError):
    """Too few points for a pairwise-distance statistic."""


class NonFiniteValueError(DriftKitError):
    """A monitored value is NaN or infinite."""


class EmptyStreamError(DriftKitError):
    """The sample stream to window is empty."""


class EmptySplitError(DriftKitError):
    """A train or validation split is empty."""


class OracleError(DriftKitError):
    """The label oracle could not supply a label for a requested sample."""


class SelectionSizeError(DriftKitError):
    """Requested selection size exceeds the candidate pool."""


class LengthMismatchError(DriftKitError):
    """Score and label sequences have different lengths."""


class EmptyInputError(DriftKitError):
    """Metric computation received no scores."""


class InsufficientDataError(DriftKitError):
    """A nested tuning split came out empty."""


class TooFewSubjectsError(DriftKitError):
    """Subject-disjoint splitting would leave a split empty."""
