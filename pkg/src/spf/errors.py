class SPFError(Exception):
    """Base class for errors raised by this package."""


class SizeLimitError(SPFError, ValueError):
    """Input too large for an exponential-time routine."""


class InvariantViolationError(SPFError, RuntimeError):
    """An internal guarantee failed. Indicates a bug, never bad input."""


class MemoConsistencyError(SPFError, LookupError):
    """A subset needed by the recursion is missing from the memo table."""
