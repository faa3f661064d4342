"""Exception types shared across the package."""


class Seq2SeqError(Exception):
    """Base class for all package errors."""


class DimensionError(Seq2SeqError):
    """Operand shapes are incompatible for the requested operation."""


class ConfigError(Seq2SeqError):
    """Invalid model or run configuration."""


class EmptySourceError(Seq2SeqError):
    """A source sentence was empty where a non-empty one is required."""


class InputError(Seq2SeqError):
    """Malformed or inconsistent user-supplied data."""


class AlignmentError(InputError):
    """Parallel corpus files have different line counts."""


class FormatError(Seq2SeqError):
    """A serialized artifact (checkpoint, vocabulary file) is corrupt."""


class NumericalDivergenceError(Seq2SeqError):
    """Training produced a non-finite loss."""
