"""Exception hierarchy shared across the package."""


class SSTrussError(Exception):
    """Base class for all package errors."""


class UnknownVertexError(SSTrussError, KeyError):
    pass


class UnknownUserError(SSTrussError, KeyError):
    pass


class TopicLengthError(SSTrussError, ValueError):
    pass


class QueryError(SSTrussError, ValueError):
    """Invalid query specification."""


class PivotError(SSTrussError, ValueError):
    pass


class IndexBuildError(SSTrussError, ValueError):
    pass


class IndexFormatError(SSTrussError):
    """Base for binary index decoding failures."""


class BadMagicError(IndexFormatError):
    pass


class VersionMismatchError(IndexFormatError):
    pass


class TruncatedIndexError(IndexFormatError):
    pass


class NetworkIOError(SSTrussError):
    """Base for TSV network loading failures."""


class MissingFileError(NetworkIOError, FileNotFoundError):
    pass


class MalformedRowError(NetworkIOError):
    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class DanglingReferenceError(NetworkIOError):
    pass


class OracleCapError(SSTrussError):
    """Candidate pool too large for exhaustive enumeration."""
