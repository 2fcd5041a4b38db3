"""Exception types shared across the package.

The command-line layer maps these onto exit codes: configuration problems
exit 1, missing or unwritable files exit 2, bad data content exits 3, and
internal invariant violations exit 4.
"""


class KnowmineError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(KnowmineError):
    """Invalid configuration value or command-line usage."""


class DataValidationError(KnowmineError):
    """Input content violates the documented schema or value ranges."""


class ParseError(DataValidationError):
    """Malformed input file content, tagged with file and line when known."""

    def __init__(self, message: str, *, path=None, line=None):
        location = str(path) if path is not None else ""
        if line is not None:
            location += f":{line}"
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.line = line


class DuplicateCourseError(ParseError):
    """The same course number appears more than once in a catalog."""


class InvalidGradeError(ParseError):
    """A grade letter outside the valid set."""


class ValueRangeError(ParseError):
    """A numeric value outside its documented range."""


class KBFormatError(ParseError):
    """Malformed lexical knowledge base file."""


class CorpusError(DataValidationError):
    """A corpus unsuitable for model building (empty, or no tokens)."""


class RankError(DataValidationError):
    """A factorization rank outside the feasible range."""


class MatrixFormatError(DataValidationError):
    """A similarity matrix file that is corrupt or of an unknown version."""


class CourseLookupError(DataValidationError):
    """A course number not present in the similarity matrix index."""


class InternalError(KnowmineError):
    """An internal invariant was violated; indicates a pipeline bug."""
