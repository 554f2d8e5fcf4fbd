"""Exception types raised across the mining pipeline."""


class SolicloneError(Exception):
    """Base class for all tool-specific failures."""


class UnbalancedBraces(SolicloneError):
    """Brace depth of a source file never returns to zero."""


class BinaryOrEmptyInput(SolicloneError):
    """A corpus file is empty or not decodable as UTF-8 text."""


class UnterminatedComment(SolicloneError):
    """A block comment inside a fragment is never closed."""


class UnterminatedString(SolicloneError):
    """A string literal inside a fragment is never closed."""


class InvalidConfig(SolicloneError):
    """A run configuration combination is not allowed."""


class InvalidRuleFile(SolicloneError):
    """The category rule file is missing, malformed, or ambiguous."""


class UnknownRoot(SolicloneError):
    """The requested root contract does not exist in the parsed unit."""


class UnknownTarget(SolicloneError):
    """A model target (clone class id or contract name) cannot be resolved."""
