"""Exception types shared across the library."""


class Error(Exception):
    """Base class for all wtindex errors."""


class BuildError(Error, ValueError):
    """Invalid construction input (empty text, bad region lengths, overflow)."""


class SymbolError(Error, ValueError):
    """Symbol is not part of the index alphabet."""


class PositionError(Error, IndexError):
    """Bit or text position outside the valid range."""


class OrdinalError(Error, ValueError):
    """select ordinal outside [1, number of occurrences]."""


class BatchError(Error):
    """A query inside a batch failed validation.

    The batch is rejected as a whole; ``index`` identifies the first
    offending query and ``__cause__`` carries the underlying error.
    """

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"query {index}: {cause}")
        self.index = index
        self.__cause__ = cause


class IndexFileError(Error):
    """Base class for errors raised while reading a serialized index."""


class BadMagicError(IndexFileError):
    """The file does not start with the index magic bytes."""


class BadVersionError(IndexFileError):
    """The index format version is not supported."""


class TruncatedError(IndexFileError):
    """The file ended before the declared payload was complete."""


class CorruptIndexError(IndexFileError):
    """A structural invariant of the index payload does not hold."""
