"""Exception and warning classes shared across the package."""


class SBTError(Exception):
    """Base class for all errors raised by stratboot."""


class ConfigError(SBTError, ValueError):
    """Invalid parameters: bad flag values, out-of-range split, etc."""


class DataError(SBTError, ValueError):
    """The input data cannot be analysed as requested."""


class ParseError(DataError):
    """Malformed delimited input.

    ``line`` is the 1-based physical line number of the offending record,
    when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class MappingError(DataError):
    """A response cell could not be converted to a number."""

    def __init__(self, message, token=None, column=None, row=None):
        super().__init__(message)
        self.token = token
        self.column = column
        self.row = row


class SBTWarning(UserWarning):
    """Non-fatal condition worth reporting (small groups, missing data)."""
