"""Exception hierarchy.

Every error family carries a distinct ``exit_code`` so the CLI can map
failures to process exit statuses without a lookup table.
"""


class WatermarkError(Exception):
    exit_code = 1


class ParseError(WatermarkError):
    """Source is not valid for the supported grammar."""

    exit_code = 5

    def __init__(self, message, lineno=None, offset=None):
        super().__init__(message)
        self.lineno = lineno
        self.offset = offset


class OverlappingEdits(WatermarkError):
    exit_code = 7


class TransformFailed(WatermarkError):
    exit_code = 7


class FixedPointNotReached(WatermarkError):
    exit_code = 7


class KeyFileError(WatermarkError):
    """Missing or malformed key file."""

    exit_code = 3


class DigestCollision(WatermarkError):
    exit_code = 7


class BadProbability(WatermarkError, ValueError):
    exit_code = 2


class CorpusIOError(WatermarkError):
    exit_code = 4


class SchemaError(WatermarkError):
    exit_code = 6

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class InterpreterMissing(WatermarkError):
    exit_code = 8
